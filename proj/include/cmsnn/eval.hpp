#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cmsnn/network.hpp"
#include "cmsnn/stats.hpp"
#include "cmsnn/yinyang.hpp"

namespace cmsnn {

// Argmax of per-neuron spike counts; ties resolve to the lowest class
// index, so an all-quiet output train deterministically predicts class 0.
int predict(const SpikeTrain& output);
int predict_counts(std::span<const double> counts);

// One simulated chip: a fixed draw of per-layer error matrices applied to
// the whole test split.
struct ChipTrial {
  int chip = 0;
  std::uint64_t seed = 0;
  std::vector<Tensor> errors;  // E^l, same shapes as the weight matrices
  double accuracy = 0.0;
};

struct ChipOptions {
  int t_steps = 100;
  bool freeze_encodings = false;  // one shared encoding instead of per-chip streams
  int jobs = 1;
};

// Monte-Carlo over n_chips virtual chips. Chip c derives its seed as
// base_seed ^ c, samples one set of error matrices with coefficient of
// variation alpha, and classifies every test sample with those fixed
// weights. Each chip re-encodes the inputs with its own stream unless
// encodings are frozen. Chips are evaluated independently, so parallel
// execution reproduces the sequential results exactly.
std::vector<ChipTrial> simulate_chips(const Model& model, const DatasetSplit& test_split,
                                      double alpha, int n_chips, std::uint64_t base_seed,
                                      const ChipOptions& options = {});

// Noise-free accuracy on a split, encodings drawn from enc_seed.
double evaluate_clean(const Model& model, const DatasetSplit& split, int t_steps,
                      std::uint64_t enc_seed);

struct PairwiseTest {
  std::string model_a;
  std::string model_b;
  double u_stat = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
};

struct ModelSummary {
  std::string model;
  int hidden = 0;
  int genes = 0;  // 0 for the MLP baselines
  std::vector<double> accuracies;
  BoxStats box;
  double clean_accuracy = -1.0;  // optional, < 0 when not measured
};

// Accuracy distributions of one comparison group plus all pairwise
// Mann-Whitney tests, Bonferroni-adjusted over the group.
struct EvalReport {
  int hidden = 0;
  double alpha = 0.0;
  int n_chips = 0;
  std::vector<ModelSummary> models;
  std::vector<PairwiseTest> tests;

  const ModelSummary* find(const std::string& name) const;
  const PairwiseTest* find_test(const std::string& a, const std::string& b) const;
};

// Builds the report for one group. Every accuracy vector must have the same
// length. bonferroni_m <= 0 selects the default: the number of pairwise
// comparisons in the group.
EvalReport summarize(const std::vector<ModelSummary>& models, double alpha, int n_chips,
                     int hidden, int bonferroni_m = 0);

}  // namespace cmsnn
