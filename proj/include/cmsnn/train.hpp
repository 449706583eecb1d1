#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cmsnn/network.hpp"
#include "cmsnn/tensor.hpp"
#include "cmsnn/yinyang.hpp"

namespace cmsnn {

enum class LossKind {
  spike_count,  // softmax cross entropy on total output spike counts
  per_step,     // mean over steps of softmax cross entropy on the step's spikes
};

struct TrainConfig {
  int epochs = 300;
  int batch_size = 512;
  std::vector<double> learning_rates = {0.03, 0.003, 0.0003};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int t_steps = 100;
  double beta = 0.9;
  double delta_t = 1.0;
  double u_thr = 1.0;
  double r = 1.0;
  double surrogate_slope = 25.0;
  LossKind loss = LossKind::spike_count;
  bool cache_encodings = false;      // encode the training split once instead of per epoch
  double alpha_train = 0.1;          // hw-aware training noise
  bool noise_literal_mean = false;
  bool hw_aware_noisy_validation = true;

  LifParams lif() const { return LifParams{beta, r, u_thr, delta_t}; }
};

// Per-parameter first/second moment accumulators for Adam.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long step_count = 0;
};

// Bias-corrected Adam update, reading each parameter's accumulated gradient
// (absent gradient counts as zero). Deterministic.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// Differentiable loss over the per-step output spike tensors.
Tensor spike_count_loss(Tape& tape, const std::vector<Tensor>& output_steps,
                        std::span<const int> labels, LossKind kind = LossKind::spike_count);

// Numeric cross entropy of softmaxed logits columns for validation.
double softmax_ce_value(const Tensor& logits, std::span<const int> labels);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochStats> history;
  double final_val_loss = 0.0;
  bool diverged = false;
  std::string divergence_note;
};

// BPTT training loop: shuffles and (by default) re-encodes the training
// split every epoch, records validation loss and accuracy per epoch. The
// hw-aware family trains and validates with freshly sampled mismatch noise.
// A NaN loss aborts the run and flags the result as diverged.
TrainResult train_model(const Model& model, const DatasetSplit& train_split,
                        const DatasetSplit& val_split, const TrainConfig& cfg,
                        std::uint64_t seed);

struct SweepArm {
  double lr = 0.0;
  TrainResult result;
};

struct SweepOutcome {
  std::vector<SweepArm> arms;
  int best_index = -1;

  const TrainResult& best() const { return arms[best_index].result; }
  double best_lr() const { return arms[best_index].lr; }
};

// Index of the arm with the lowest final validation loss, ties broken
// toward the smaller learning rate; -1 if every arm diverged.
int select_best_arm(const std::vector<SweepArm>& arms);

// Trains one copy of the template per learning rate and keeps the arm with
// the lowest final validation loss; ties break toward the smaller rate.
// Throws if every arm diverged, listing the per-rate outcomes.
SweepOutcome sweep_and_select(const Model& template_model, const DatasetSplit& train_split,
                              const DatasetSplit& val_split, const TrainConfig& cfg,
                              std::uint64_t seed, int jobs = 1);

}  // namespace cmsnn
