#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmsnn/genome.hpp"
#include "cmsnn/lif.hpp"
#include "cmsnn/rng.hpp"
#include "cmsnn/tensor.hpp"

namespace cmsnn {

enum class ModelFamily { cm, mlp, mlp_hw_aware };

std::string family_name(ModelFamily family);
ModelFamily family_from_name(const std::string& name);

// A layered feedforward spiking network. Weights come either from a genome
// (cm) or from directly learned matrices (mlp, mlp_hw_aware); the hw-aware
// variant additionally trains under injected mismatch noise.
struct Model {
  ModelFamily family = ModelFamily::mlp;
  std::string name;  // e.g. "mlp", "mlp-hw-aware", "cm-g16"
  std::vector<int> widths;
  LifParams lif;
  double surrogate_slope = 25.0;

  Genome genome;                // defined iff family == cm
  std::vector<Tensor> weights;  // W^1 .. W^{H-1} iff family != cm

  double alpha_train = 0.0;        // hw-aware only
  bool noise_literal_mean = false; // reproduce the literal pseudocode sampling

  int layer_count() const { return static_cast<int>(widths.size()); }
  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }

  // Learnable tensors: {X, O} for cm, the weight matrices otherwise.
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;

  // Numeric W^l for every layer (materializes the genome product for cm).
  std::vector<Tensor> layer_weight_values() const;
};

Model make_mlp(const std::string& name, const std::vector<int>& widths, const LifParams& lif,
               Rng& rng, bool hw_aware = false, double alpha_train = 0.1);
Model make_cm(const std::string& name, const std::vector<int>& widths, int genes,
              const LifParams& lif, Rng& rng);

// Deep copy: parameter tensors get fresh storage, so training the copy
// leaves the original untouched.
Model clone_model(const Model& model);

// Per-layer mismatch matrices E^l. Default sampling is zero-mean with
// per-entry standard deviation alpha*|W_uv| (a coefficient of variation);
// literal_mean instead reproduces E ~ N(W, alpha^2 W.W) verbatim.
std::vector<Tensor> sample_mismatch(const std::vector<Tensor>& weights, double alpha, Rng& rng,
                                    bool literal_mean = false);

// Forward pass over one input spike train (Algorithm-style loop: membranes
// start at zero, every layer advances once per step). Noise-free.
SpikeTrain forward(const Model& model, const SpikeTrain& input);

// Same loop with freshly sampled mismatch added to every weight matrix; the
// error matrices stay fixed for the whole pass.
SpikeTrain forward_noisy(const Model& model, const SpikeTrain& input, double alpha, Rng& rng);

// --- batched paths -------------------------------------------------------

// Batched no-grad forward: per-step input tensors (n_0 x B) in, per-neuron
// output spike counts (n_out x B) out. Optional fixed mismatch matrices.
Tensor forward_counts(const std::vector<Tensor>& weights, const LifParams& lif,
                      const std::vector<Tensor>& input_steps,
                      const std::vector<Tensor>* mismatch = nullptr);

// Batched differentiable forward recorded on a tape. Returns one (n_out x B)
// spike tensor per step. For cm models the weight product is recorded too,
// so gradients reach X and O; mismatch (when given) is a constant.
std::vector<Tensor> forward_on_tape(Tape& tape, const Model& model,
                                    const std::vector<Tensor>& input_steps,
                                    const std::vector<Tensor>* mismatch = nullptr);

// Assemble per-step batch tensors (n x B) from per-sample spike trains.
std::vector<Tensor> batch_input_steps(const std::vector<SpikeTrain>& trains);

}  // namespace cmsnn
