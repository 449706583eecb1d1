// Command-line front end: dataset generation, training, simulated on-chip
// evaluation, statistics and plotting, individually or as one reproducible
// run. Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cmsnn/experiment.hpp"
#include "cmsnn/serialize.hpp"

namespace {

cmsnn::ExperimentConfig resolve_config(const std::string& config_path, bool smoke,
                                       std::optional<std::uint64_t> seed_override) {
  cmsnn::ExperimentConfig cfg;
  if (smoke) {
    cfg = cmsnn::ExperimentConfig::smoke();
  } else if (!config_path.empty()) {
    cfg = cmsnn::load_config(config_path);
  }
  if (seed_override) cfg.master_seed = *seed_override;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Connectome-model spiking networks under simulated device mismatch"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string report_path;
  std::string svg_path;
  std::optional<std::uint64_t> seed_override;
  int jobs = 1;
  bool smoke = false;
  bool scatter = false;

  auto add_common = [&](CLI::App* cmd, bool with_config) {
    cmd->add_option("--out", out_dir, "Output directory (artifact tree root)");
    cmd->add_option("--seed", seed_override, "Override the master seed");
    cmd->add_option("--jobs", jobs, "Worker threads for independent work units");
    if (with_config) {
      cmd->add_option("--config", config_path, "Experiment configuration file");
      cmd->add_flag("--smoke", smoke, "Use the built-in tiny smoke configuration");
    }
  };

  auto* cmd_generate = app.add_subcommand("generate-data", "Write the dataset splits as CSV");
  add_common(cmd_generate, true);
  cmd_generate->add_flag("--scatter", scatter, "Also render scatter SVGs of the splits");

  auto* cmd_train = app.add_subcommand("train", "Sweep learning rates and train every model");
  add_common(cmd_train, true);

  auto* cmd_evaluate =
      app.add_subcommand("evaluate", "Simulate mismatched chips on the test split");
  add_common(cmd_evaluate, true);

  auto* cmd_stats = app.add_subcommand("stats", "Summaries and Mann-Whitney tests");
  add_common(cmd_stats, true);

  auto* cmd_plot = app.add_subcommand("plot", "Render the box plot from a report");
  cmd_plot->add_option("--report", report_path, "report.json produced by stats")->required();
  cmd_plot->add_option("--out", svg_path, "Output SVG path")->required();

  auto* cmd_run = app.add_subcommand("run", "Full pipeline with a reproducible manifest");
  add_common(cmd_run, true);
  cmd_run->add_flag("--scatter", scatter, "Also render scatter SVGs of the splits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    cmsnn::StageOptions opts;
    opts.jobs = jobs;
    opts.scatter = scatter;
    if (cmd_plot->parsed()) {
      cmsnn::stage_plot(report_path, svg_path, std::cout);
      return 0;
    }
    const cmsnn::ExperimentConfig cfg = resolve_config(config_path, smoke, seed_override);
    if (cmd_generate->parsed()) {
      cmsnn::stage_generate_data(cfg, out_dir, opts, std::cout);
    } else if (cmd_train->parsed()) {
      cmsnn::stage_train(cfg, out_dir, opts, std::cout);
    } else if (cmd_evaluate->parsed()) {
      cmsnn::stage_evaluate(cfg, out_dir, opts, std::cout);
    } else if (cmd_stats->parsed()) {
      cmsnn::stage_stats(cfg, out_dir, std::cout);
    } else if (cmd_run->parsed()) {
      const auto failed = cmsnn::run_experiment(cfg, out_dir, opts, std::cout);
      if (!failed.empty()) {
        std::cerr << "warning: " << failed.size() << " model(s) failed to train\n";
      }
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
