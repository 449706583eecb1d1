#include "cmsnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cmsnn/eval.hpp"
#include "cmsnn/parallel.hpp"

namespace cmsnn {

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      state.m[p].assign(params[p].size(), 0.0);
      state.v[p].assign(params[p].size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw ContractError("adam_step: state tracks " + std::to_string(state.m.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step_count));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& param = params[p];
    if (state.m[p].size() != static_cast<std::size_t>(param.size())) {
      throw ContractError("adam_step: accumulator shape mismatch for parameter " +
                          std::to_string(p));
    }
    const bool has_grad = param.has_grad();
    const double* g = has_grad ? param.grad().data() : nullptr;
    double* mv = state.m[p].data();
    double* vv = state.v[p].data();
    double* w = param.data();
    const int n = param.size();
    for (int i = 0; i < n; ++i) {
      const double gi = has_grad ? g[i] : 0.0;
      mv[i] = beta1 * mv[i] + (1.0 - beta1) * gi;
      vv[i] = beta2 * vv[i] + (1.0 - beta2) * gi * gi;
      const double m_hat = mv[i] / bc1;
      const double v_hat = vv[i] / bc2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

Tensor spike_count_loss(Tape& tape, const std::vector<Tensor>& output_steps,
                        std::span<const int> labels, LossKind kind) {
  if (output_steps.empty()) throw ContractError("spike_count_loss: no output steps");
  if (kind == LossKind::spike_count) {
    Tensor counts = output_steps.front();
    for (std::size_t t = 1; t < output_steps.size(); ++t) {
      counts = tape.add(counts, output_steps[t]);
    }
    return tape.softmax_cross_entropy(counts, labels);
  }
  // per-step variant: average the cross entropy of each step's spike vector
  Tensor acc = tape.softmax_cross_entropy(output_steps.front(), labels);
  for (std::size_t t = 1; t < output_steps.size(); ++t) {
    acc = tape.add(acc, tape.softmax_cross_entropy(output_steps[t], labels));
  }
  return tape.scale(acc, 1.0 / static_cast<double>(output_steps.size()));
}

double softmax_ce_value(const Tensor& logits, std::span<const int> labels) {
  const int k = logits.rows(), b = logits.cols();
  if (static_cast<int>(labels.size()) != b) {
    throw ShapeError("softmax_ce_value: label count does not match batch");
  }
  std::vector<double> probs(static_cast<std::size_t>(k) * b);
  kernels::softmax_columns(logits.data(), probs.data(), k, b);
  std::vector<int> ls(labels.begin(), labels.end());
  for (int j = 0; j < b; ++j) {
    if (ls[j] < 0 || ls[j] >= k) throw ContractError("softmax_ce_value: label out of range");
  }
  return kernels::softmax_ce_mean(probs.data(), ls.data(), k, b);
}

namespace {

struct EncodedSplit {
  std::vector<Tensor> steps;  // T tensors of shape n0 x B
  std::vector<int> labels;
};

EncodedSplit encode_whole_split(const DatasetSplit& split, int t_steps, std::uint64_t seed) {
  std::vector<SpikeTrain> trains;
  trains.reserve(split.points.size());
  Rng rng(seed);
  for (const auto& p : split.points) trains.push_back(rate_encode(p, t_steps, rng));
  EncodedSplit enc;
  enc.steps = batch_input_steps(trains);
  enc.labels.reserve(split.points.size());
  for (const auto& p : split.points) enc.labels.push_back(static_cast<int>(p.label));
  return enc;
}

// Validation pass: loss plus accuracy, optionally under fixed mismatch.
std::pair<double, double> validate(const Model& model, const EncodedSplit& val,
                                   const std::vector<Tensor>* mismatch) {
  const Tensor counts =
      forward_counts(model.layer_weight_values(), model.lif, val.steps, mismatch);
  const double loss = softmax_ce_value(counts, val.labels);
  int correct = 0;
  std::vector<double> column(counts.rows());
  for (int b = 0; b < counts.cols(); ++b) {
    for (int i = 0; i < counts.rows(); ++i) column[i] = counts.at(i, b);
    if (predict_counts(column) == val.labels[b]) ++correct;
  }
  return {loss, static_cast<double>(correct) / counts.cols()};
}

}  // namespace

TrainResult train_model(const Model& model_in, const DatasetSplit& train_split,
                        const DatasetSplit& val_split, const TrainConfig& cfg,
                        std::uint64_t seed) {
  if (train_split.points.empty()) throw ContractError("train_model: empty training split");
  if (val_split.points.empty()) throw ContractError("train_model: empty validation split");
  if (cfg.learning_rates.empty()) throw ContractError("train_model: no learning rate configured");
  cfg.lif().validate();
  const double lr = cfg.learning_rates.front();

  TrainResult res;
  res.model = clone_model(model_in);
  Model& model = res.model;
  if (cfg.epochs == 0) {
    // validation encodings are a pure function of the split, shared by arms
    const EncodedSplit val = encode_whole_split(val_split, cfg.t_steps,
                                                derive_seed(val_split.seed, "rate-enc", "val"));
    res.final_val_loss = validate(model, val, nullptr).first;
    return res;
  }

  const bool hw_noise = model.family == ModelFamily::mlp_hw_aware && model.alpha_train > 0.0;
  auto params = model.parameters();
  AdamState adam;

  const EncodedSplit val =
      encode_whole_split(val_split, cfg.t_steps, derive_seed(val_split.seed, "rate-enc", "val"));

  const int n_train = train_split.size();
  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  std::vector<SpikeTrain> encodings(n_train);
  std::uint64_t noise_counter = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (!cfg.cache_encodings || epoch == 0) {
      Rng enc_rng(derive_seed(seed, "train-enc", "", static_cast<std::uint64_t>(epoch)));
      for (int i = 0; i < n_train; ++i) {
        encodings[i] = rate_encode(train_split.points[i], cfg.t_steps, enc_rng);
      }
    }
    {
      Rng shuffle_rng(derive_seed(seed, "shuffle", "", static_cast<std::uint64_t>(epoch)));
      for (int i = n_train - 1; i > 0; --i) {
        const int j = static_cast<int>(shuffle_rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[i], order[j]);
      }
    }

    double loss_sum = 0.0;
    int batches = 0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int end = std::min(n_train, start + cfg.batch_size);
      std::vector<SpikeTrain> batch_trains;
      std::vector<int> batch_labels;
      batch_trains.reserve(end - start);
      batch_labels.reserve(end - start);
      for (int i = start; i < end; ++i) {
        batch_trains.push_back(encodings[order[i]]);
        batch_labels.push_back(static_cast<int>(train_split.points[order[i]].label));
      }
      const auto input_steps = batch_input_steps(batch_trains);

      std::vector<Tensor> mismatch;
      if (hw_noise) {
        Rng noise_rng(derive_seed(seed, "train-noise", "", noise_counter++));
        mismatch = sample_mismatch(model.weights, model.alpha_train, noise_rng,
                                   model.noise_literal_mean);
      }

      Tape tape;
      const auto outputs =
          forward_on_tape(tape, model, input_steps, mismatch.empty() ? nullptr : &mismatch);
      const Tensor loss = spike_count_loss(tape, outputs, batch_labels, cfg.loss);
      const double loss_value = loss.scalar();
      if (!std::isfinite(loss_value)) {
        res.diverged = true;
        res.divergence_note = "loss became " + std::to_string(loss_value) + " at epoch " +
                              std::to_string(epoch) + ", batch " + std::to_string(batches);
        res.final_val_loss = std::numeric_limits<double>::infinity();
        return res;
      }
      tape.backward(loss);
      adam_step(params, adam, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
      for (auto& p : params) p.zero_grad();
      loss_sum += loss_value;
      ++batches;
    }

    std::vector<Tensor> val_mismatch;
    if (hw_noise && cfg.hw_aware_noisy_validation) {
      Rng noise_rng(derive_seed(seed, "val-noise", "", static_cast<std::uint64_t>(epoch)));
      val_mismatch = sample_mismatch(model.weights, model.alpha_train, noise_rng,
                                     model.noise_literal_mean);
    }
    const auto [val_loss, val_acc] =
        validate(model, val, val_mismatch.empty() ? nullptr : &val_mismatch);
    res.history.push_back(EpochStats{epoch, loss_sum / batches, val_loss, val_acc});
  }

  res.final_val_loss = res.history.back().val_loss;
  return res;
}

int select_best_arm(const std::vector<SweepArm>& arms) {
  int best = -1;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const auto& arm = arms[a];
    if (arm.result.diverged) continue;
    if (best < 0) {
      best = static_cast<int>(a);
      continue;
    }
    const auto& incumbent = arms[best];
    if (arm.result.final_val_loss < incumbent.result.final_val_loss ||
        (arm.result.final_val_loss == incumbent.result.final_val_loss && arm.lr < incumbent.lr)) {
      best = static_cast<int>(a);
    }
  }
  return best;
}

SweepOutcome sweep_and_select(const Model& template_model, const DatasetSplit& train_split,
                              const DatasetSplit& val_split, const TrainConfig& cfg,
                              std::uint64_t seed, int jobs) {
  if (cfg.learning_rates.empty()) throw ContractError("sweep_and_select: no learning rates");
  SweepOutcome outcome;
  outcome.arms.resize(cfg.learning_rates.size());
  parallel_for(cfg.learning_rates.size(), jobs, [&](std::size_t a) {
    TrainConfig arm_cfg = cfg;
    arm_cfg.learning_rates = {cfg.learning_rates[a]};
    SweepArm arm;
    arm.lr = cfg.learning_rates[a];
    arm.result =
        train_model(template_model, train_split, val_split, arm_cfg,
                    derive_seed(seed, "arm", template_model.name, static_cast<std::uint64_t>(a)));
    outcome.arms[a] = std::move(arm);
  });

  outcome.best_index = select_best_arm(outcome.arms);
  if (outcome.best_index < 0) {
    std::string detail = "sweep_and_select: every arm diverged:";
    for (const auto& arm : outcome.arms) {
      detail += " [lr=" + std::to_string(arm.lr) + ": " + arm.result.divergence_note + "]";
    }
    throw ContractError(detail);
  }
  return outcome;
}

}  // namespace cmsnn
