#include "cmsnn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cmsnn/parallel.hpp"
#include "cmsnn/plot.hpp"
#include "cmsnn/serialize.hpp"

namespace cmsnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Model make_template(const ExperimentConfig& cfg, const ModelSpec& spec) {
  const LifParams lif = cfg.train.lif();
  const std::uint64_t init_seed = derive_seed(cfg.master_seed, "init", spec.id);
  Rng rng(init_seed);
  const std::vector<int> widths = cfg.model_widths(spec.hidden);
  Model model;
  switch (spec.family) {
    case ModelFamily::mlp:
      model = make_mlp(spec.id, widths, lif, rng);
      break;
    case ModelFamily::mlp_hw_aware:
      model = make_mlp(spec.id, widths, lif, rng, /*hw_aware=*/true, cfg.train.alpha_train);
      break;
    case ModelFamily::cm:
      model = make_cm(spec.id, widths, spec.genes, lif, rng);
      model.genome.init_seed = init_seed;
      break;
  }
  model.surrogate_slope = cfg.train.surrogate_slope;
  model.noise_literal_mean = cfg.train.noise_literal_mean;
  return model;
}

std::vector<ModelSpec> all_specs(const ExperimentConfig& cfg) {
  std::vector<ModelSpec> specs;
  for (int width : cfg.hidden_widths) {
    for (auto& s : cfg.model_specs(width)) specs.push_back(std::move(s));
  }
  return specs;
}

DatasetSplit load_split(const ExperimentConfig& cfg, const fs::path& out,
                        const std::string& name, std::uint64_t seed) {
  const fs::path path = out / "data" / (name + ".csv");
  if (!fs::exists(path)) {
    throw IoError("missing " + path.string() + "; run generate-data first");
  }
  DatasetSplit split = dataset_from_csv(path);
  split.name = name;
  split.seed = seed;
  return split;
}

void save_sweep_csv(const std::vector<SweepArm>& arms, int best, const fs::path& path) {
  std::ostringstream out;
  out << "lr,final_val_loss,diverged,selected\n";
  char buf[96];
  for (std::size_t a = 0; a < arms.size(); ++a) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%d\n", arms[a].lr,
                  arms[a].result.final_val_loss, arms[a].result.diverged ? 1 : 0,
                  static_cast<int>(a) == best ? 1 : 0);
    out << buf;
  }
  write_text_file(path, out.str());
}

}  // namespace

void stage_generate_data(const ExperimentConfig& cfg, const fs::path& out,
                         const StageOptions& opts, std::ostream& log) {
  fs::create_directories(out / "data");
  const struct {
    const char* name;
    int size;
    std::uint64_t seed;
  } splits[] = {{"training", cfg.data.train_size, cfg.data.train_seed},
                {"validation", cfg.data.val_size, cfg.data.val_seed},
                {"test", cfg.data.test_size, cfg.data.test_seed}};
  json manifest;
  manifest["balanced"] = cfg.data.balanced;
  for (const auto& s : splits) {
    const DatasetSplit split = generate_split(s.name, s.size, s.seed, cfg.data.balanced);
    dataset_to_csv(split, out / "data" / (std::string(s.name) + ".csv"));
    if (opts.scatter) {
      write_scatter_svg(split, out / "data" / ("scatter_" + std::string(s.name) + ".svg"));
    }
    manifest[s.name] = {{"size", s.size}, {"seed", s.seed}};
    log << "data: " << s.name << " " << s.size << " points (seed " << s.seed << ")\n";
  }
  write_text_file(out / "data" / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<std::string> stage_train(const ExperimentConfig& cfg, const fs::path& out,
                                     const StageOptions& opts, std::ostream& log) {
  const DatasetSplit train_split = load_split(cfg, out, "training", cfg.data.train_seed);
  const DatasetSplit val_split = load_split(cfg, out, "validation", cfg.data.val_seed);

  const auto specs = all_specs(cfg);
  const std::size_t n_arms = cfg.train.learning_rates.size();
  std::vector<std::vector<SweepArm>> arms(specs.size(), std::vector<SweepArm>(n_arms));

  // sweep arms across all models are independent work units
  parallel_for(specs.size() * n_arms, opts.jobs, [&](std::size_t unit) {
    const std::size_t s = unit / n_arms;
    const std::size_t a = unit % n_arms;
    TrainConfig arm_cfg = cfg.train;
    arm_cfg.learning_rates = {cfg.train.learning_rates[a]};
    SweepArm arm;
    arm.lr = cfg.train.learning_rates[a];
    arm.result = train_model(make_template(cfg, specs[s]), train_split, val_split, arm_cfg,
                             derive_seed(cfg.master_seed, "arm", specs[s].id, a));
    arms[s][a] = std::move(arm);
  });

  std::vector<std::string> failed;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const int best = select_best_arm(arms[s]);
    const fs::path model_dir = out / "models" / specs[s].id;
    fs::create_directories(model_dir);
    save_sweep_csv(arms[s], best, model_dir / "sweep.csv");
    if (best < 0) {
      failed.push_back(specs[s].id);
      log << "train: " << specs[s].id << " FAILED (all learning rates diverged)\n";
      continue;
    }
    const auto& chosen = arms[s][static_cast<std::size_t>(best)];
    save_model(chosen.result.model, model_dir / "checkpoint.json",
               {{"master", cfg.master_seed},
                {"init", derive_seed(cfg.master_seed, "init", specs[s].id)},
                {"arm", derive_seed(cfg.master_seed, "arm", specs[s].id,
                                    static_cast<std::uint64_t>(best))}});
    save_history_csv(chosen.result.history, model_dir / "history.csv");
    log << "train: " << specs[s].id << " best lr " << chosen.lr << " val loss "
        << chosen.result.final_val_loss << "\n";
  }
  return failed;
}

void stage_evaluate(const ExperimentConfig& cfg, const fs::path& out, const StageOptions& opts,
                    std::ostream& log) {
  const DatasetSplit test_split = load_split(cfg, out, "test", cfg.data.test_seed);
  const auto specs = all_specs(cfg);

  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::ostringstream clean_csv;
  clean_csv << "model,clean_accuracy\n";
  for (const auto& spec : specs) {
    const fs::path checkpoint = out / "models" / spec.id / "checkpoint.json";
    if (!fs::exists(checkpoint)) {
      log << "eval: " << spec.id << " skipped (no checkpoint)\n";
      continue;
    }
    const Model model = load_model(checkpoint);
    ChipOptions chip_opts;
    chip_opts.t_steps = cfg.train.t_steps;
    chip_opts.freeze_encodings = cfg.eval.freeze_encodings;
    chip_opts.jobs = opts.jobs;
    const auto trials = simulate_chips(model, test_split, cfg.eval.alpha, cfg.eval.n_chips,
                                       derive_seed(cfg.master_seed, "chips", spec.id), chip_opts);
    std::vector<double> accs;
    accs.reserve(trials.size());
    for (const auto& t : trials) accs.push_back(t.accuracy);
    rows.emplace_back(spec.id, std::move(accs));

    const double clean = evaluate_clean(model, test_split, cfg.train.t_steps,
                                        derive_seed(cfg.data.test_seed, "rate-enc", "test"));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s,%.17g\n", spec.id.c_str(), clean);
    clean_csv << buf;
    log << "eval: " << spec.id << " median noisy acc "
        << median(rows.back().second) << ", clean acc " << clean << "\n";
  }
  fs::create_directories(out / "eval");
  save_accuracies_csv(rows, out / "eval" / "accuracies.csv");
  write_text_file(out / "eval" / "clean.csv", clean_csv.str());
}

std::vector<EvalReport> stage_stats(const ExperimentConfig& cfg, const fs::path& out,
                                    std::ostream& log) {
  const auto rows = load_accuracies_csv(out / "eval" / "accuracies.csv");
  std::map<std::string, double> clean;
  {
    const fs::path clean_path = out / "eval" / "clean.csv";
    if (fs::exists(clean_path)) {
      std::istringstream in(read_text_file(clean_path));
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        clean[line.substr(0, comma)] = std::strtod(line.c_str() + comma + 1, nullptr);
      }
    }
  }

  std::vector<EvalReport> groups;
  for (int width : cfg.hidden_widths) {
    std::vector<ModelSummary> summaries;
    for (const auto& spec : cfg.model_specs(width)) {
      for (const auto& [id, accs] : rows) {
        if (id != spec.id) continue;
        ModelSummary m;
        m.model = spec.name;
        m.hidden = width;
        m.genes = spec.genes;
        m.accuracies = accs;
        if (auto it = clean.find(id); it != clean.end()) m.clean_accuracy = it->second;
        summaries.push_back(std::move(m));
      }
    }
    if (summaries.empty()) continue;
    groups.push_back(
        summarize(summaries, cfg.eval.alpha, cfg.eval.n_chips, width, cfg.eval.bonferroni_m));
    log << "stats: group w" << width << " with " << summaries.size() << " models, "
        << groups.back().tests.size() << " pairwise tests\n";
  }
  save_report_json(groups, out / "eval" / "report.json");
  return groups;
}

void stage_plot(const fs::path& report_path, const fs::path& svg_path, std::ostream& log) {
  const auto groups = load_report_json(report_path);
  write_boxplot_svg(groups, svg_path);
  fs::path boxes = svg_path;
  boxes.replace_filename("boxes.csv");
  save_box_geometry_csv(groups, boxes);
  log << "plot: wrote " << svg_path.string() << " and " << boxes.string() << "\n";
}

std::vector<std::string> run_experiment(const ExperimentConfig& cfg, const fs::path& out,
                                        const StageOptions& opts, std::ostream& log) {
  const std::string started = timestamp_now();
  fs::create_directories(out);
  write_text_file(out / "config.cfg", serialize_config(cfg));

  stage_generate_data(cfg, out, opts, log);
  const auto failed = stage_train(cfg, out, opts, log);
  stage_evaluate(cfg, out, opts, log);
  stage_stats(cfg, out, log);
  fs::create_directories(out / "plots");
  stage_plot(out / "eval" / "report.json", out / "plots" / "results.svg", log);

  // manifest: config identity, seed fan-out, and a checksum per artifact
  json manifest;
  manifest["format"] = "cmsnn-run-manifest-v1";
  manifest["code_version"] = kVersion;
  manifest["config_hash"] = hex64(config_hash(cfg));
  manifest["master_seed"] = cfg.master_seed;
  manifest["failed_models"] = failed;
  json seeds;
  for (const auto& spec : all_specs(cfg)) {
    seeds[spec.id + "/init"] = hex64(derive_seed(cfg.master_seed, "init", spec.id));
    for (std::size_t a = 0; a < cfg.train.learning_rates.size(); ++a) {
      seeds[spec.id + "/arm" + std::to_string(a)] =
          hex64(derive_seed(cfg.master_seed, "arm", spec.id, a));
    }
    seeds[spec.id + "/chips"] = hex64(derive_seed(cfg.master_seed, "chips", spec.id));
  }
  manifest["stage_seeds"] = seeds;
  manifest["started"] = started;
  manifest["finished"] = timestamp_now();

  json files = json::array();
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (entry.is_regular_file() && entry.path().filename() != "run_manifest.json") {
      paths.push_back(fs::relative(entry.path(), out));
    }
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& rel : paths) {
    files.push_back({{"path", rel.generic_string()},
                     {"bytes", fs::file_size(out / rel)},
                     {"fnv64", hex64(file_checksum(out / rel))}});
  }
  manifest["files"] = files;
  write_text_file(out / "run_manifest.json", manifest.dump(2) + "\n");
  log << "run: manifest with " << paths.size() << " files\n";
  return failed;
}

std::string manifest_reproducible_view(const fs::path& manifest_path) {
  json j = json::parse(read_text_file(manifest_path));
  j.erase("started");
  j.erase("finished");
  return j.dump(2);
}

}  // namespace cmsnn
