#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cmsnn/config.hpp"
#include "cmsnn/eval.hpp"

namespace cmsnn {

// Artifact tree produced under the output directory:
//   config.cfg                      effective configuration, canonical form
//   data/{training,validation,test}.csv (+ optional scatter SVGs)
//   data/manifest.json
//   models/<id>/{checkpoint.json, history.csv, sweep.csv}
//   eval/accuracies.csv, eval/clean.csv
//   eval/report.json
//   plots/{results.svg, boxes.csv}
//   run_manifest.json               (run subcommand only)
//
// Each stage reads its inputs from the tree, so the subcommands compose;
// `run` chains all of them and finishes with the manifest. Every stage is a
// pure function of (config, master seed), and parallel execution writes
// results into indexed slots, so outputs are byte-identical across runs and
// thread counts.

struct StageOptions {
  int jobs = 1;
  bool scatter = false;  // also render dataset scatter SVGs
};

void stage_generate_data(const ExperimentConfig& cfg, const std::filesystem::path& out,
                         const StageOptions& opts, std::ostream& log);

// Trains every configured model (learning-rate sweep arms run in parallel)
// and writes checkpoints. Models whose every arm diverged are recorded and
// skipped by later stages.
std::vector<std::string> stage_train(const ExperimentConfig& cfg,
                                     const std::filesystem::path& out, const StageOptions& opts,
                                     std::ostream& log);

void stage_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out,
                    const StageOptions& opts, std::ostream& log);

std::vector<EvalReport> stage_stats(const ExperimentConfig& cfg,
                                    const std::filesystem::path& out, std::ostream& log);

void stage_plot(const std::filesystem::path& report_path, const std::filesystem::path& svg_path,
                std::ostream& log);

// Full pipeline plus run_manifest.json. Returns the ids of models that
// failed to train (partial failures do not abort the run).
std::vector<std::string> run_experiment(const ExperimentConfig& cfg,
                                        const std::filesystem::path& out,
                                        const StageOptions& opts, std::ostream& log);

// Manifest contents minus the volatile timestamp fields; two runs of the
// same config must agree on this string exactly.
std::string manifest_reproducible_view(const std::filesystem::path& manifest_path);

}  // namespace cmsnn
