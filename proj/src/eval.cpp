#include "cmsnn/eval.hpp"

#include <algorithm>
#include <cmath>

#include "cmsnn/parallel.hpp"

namespace cmsnn {

int predict_counts(std::span<const double> counts) {
  if (counts.empty()) throw ContractError("predict_counts: empty counts");
  int best = 0;
  for (int k = 1; k < static_cast<int>(counts.size()); ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return best;
}

int predict(const SpikeTrain& output) {
  std::vector<double> counts(output.neurons, 0.0);
  for (int t = 0; t < output.steps; ++t) {
    for (int n = 0; n < output.neurons; ++n) counts[n] += output.at(t, n);
  }
  return predict_counts(counts);
}

namespace {

std::vector<Tensor> encode_split_steps(const DatasetSplit& split, int t_steps,
                                       std::uint64_t enc_seed) {
  std::vector<SpikeTrain> trains;
  trains.reserve(split.points.size());
  Rng rng(enc_seed);
  for (const auto& p : split.points) trains.push_back(rate_encode(p, t_steps, rng));
  return batch_input_steps(trains);
}

double accuracy_from_counts(const Tensor& counts, const DatasetSplit& split) {
  int correct = 0;
  const int batch = counts.cols();
  std::vector<double> column(counts.rows());
  for (int b = 0; b < batch; ++b) {
    for (int k = 0; k < counts.rows(); ++k) column[k] = counts.at(k, b);
    if (predict_counts(column) == static_cast<int>(split.points[b].label)) ++correct;
  }
  return static_cast<double>(correct) / batch;
}

}  // namespace

std::vector<ChipTrial> simulate_chips(const Model& model, const DatasetSplit& test_split,
                                      double alpha, int n_chips, std::uint64_t base_seed,
                                      const ChipOptions& options) {
  if (n_chips < 1) throw ContractError("simulate_chips: need n_chips >= 1");
  if (alpha < 0.0) throw ContractError("simulate_chips: alpha must be >= 0");
  if (test_split.points.empty()) throw ContractError("simulate_chips: empty test split");

  const auto weights = model.layer_weight_values();

  // Frozen mode shares one encoding across chips so that alpha = 0
  // reproduces the noiseless evaluation bit for bit.
  std::vector<Tensor> frozen_steps;
  if (options.freeze_encodings) {
    frozen_steps =
        encode_split_steps(test_split, options.t_steps, derive_seed(base_seed, "frozen-enc"));
  }

  std::vector<ChipTrial> trials(n_chips);
  parallel_for(static_cast<std::size_t>(n_chips), options.jobs, [&](std::size_t c) {
    ChipTrial trial;
    trial.chip = static_cast<int>(c);
    trial.seed = base_seed ^ static_cast<std::uint64_t>(c);
    if (alpha > 0.0) {
      Rng noise_rng(derive_seed(trial.seed, "mismatch"));
      trial.errors = sample_mismatch(weights, alpha, noise_rng, model.noise_literal_mean);
    }
    const std::vector<Tensor>* mismatch = trial.errors.empty() ? nullptr : &trial.errors;
    Tensor counts;
    if (options.freeze_encodings) {
      counts = forward_counts(weights, model.lif, frozen_steps, mismatch);
    } else {
      const auto steps =
          encode_split_steps(test_split, options.t_steps, derive_seed(trial.seed, "chip-enc"));
      counts = forward_counts(weights, model.lif, steps, mismatch);
    }
    trial.accuracy = accuracy_from_counts(counts, test_split);
    trials[c] = std::move(trial);
  });
  return trials;
}

double evaluate_clean(const Model& model, const DatasetSplit& split, int t_steps,
                      std::uint64_t enc_seed) {
  if (split.points.empty()) throw ContractError("evaluate_clean: empty split");
  const auto steps = encode_split_steps(split, t_steps, enc_seed);
  const Tensor counts = forward_counts(model.layer_weight_values(), model.lif, steps);
  return accuracy_from_counts(counts, split);
}

const ModelSummary* EvalReport::find(const std::string& name) const {
  for (const auto& m : models) {
    if (m.model == name) return &m;
  }
  return nullptr;
}

const PairwiseTest* EvalReport::find_test(const std::string& a, const std::string& b) const {
  for (const auto& t : tests) {
    if ((t.model_a == a && t.model_b == b) || (t.model_a == b && t.model_b == a)) return &t;
  }
  return nullptr;
}

EvalReport summarize(const std::vector<ModelSummary>& models, double alpha, int n_chips,
                     int hidden, int bonferroni_m) {
  EvalReport report;
  report.hidden = hidden;
  report.alpha = alpha;
  report.n_chips = n_chips;
  report.models = models;
  for (auto& m : report.models) {
    if (static_cast<int>(m.accuracies.size()) != static_cast<int>(models.front().accuracies.size())) {
      throw ContractError("summarize: accuracy vectors must have equal length");
    }
    m.box = box_stats(m.accuracies);
  }
  const int n_models = static_cast<int>(report.models.size());
  const int n_pairs = n_models * (n_models - 1) / 2;
  if (n_pairs == 0) return report;
  const int m_comparisons = bonferroni_m > 0 ? bonferroni_m : n_pairs;

  std::vector<double> raw;
  for (int i = 0; i < n_models; ++i) {
    for (int j = i + 1; j < n_models; ++j) {
      PairwiseTest t;
      t.model_a = report.models[i].model;
      t.model_b = report.models[j].model;
      const auto mw = mann_whitney_u(report.models[i].accuracies, report.models[j].accuracies);
      t.u_stat = mw.u_a;
      t.p_raw = mw.p;
      raw.push_back(mw.p);
      report.tests.push_back(std::move(t));
    }
  }
  const auto adjusted = bonferroni(raw, m_comparisons);
  for (std::size_t i = 0; i < adjusted.size(); ++i) report.tests[i].p_adjusted = adjusted[i];
  return report;
}

}  // namespace cmsnn
