#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cmsnn/errors.hpp"
#include "cmsnn/tensor.hpp"

namespace cmsnn {

// Leaky integrate-and-fire constants shared by every neuron in a network.
// The decay factor and the membrane time constant are tied by
// beta = 1 - delta_t / tau; tau is derived so the relation holds exactly.
struct LifParams {
  double beta = 0.9;     // per-step decay of the membrane potential
  double r = 1.0;        // virtual resistance turning current into voltage
  double u_thr = 1.0;    // spike threshold
  double delta_t = 1.0;  // simulation step

  double tau() const { return delta_t / (1.0 - beta); }

  void validate() const {
    if (!(beta > 0.0 && beta < 1.0)) throw ContractError("LifParams: beta must lie in (0, 1)");
    if (!(u_thr > 0.0)) throw ContractError("LifParams: u_thr must be positive");
    if (!(delta_t > 0.0)) throw ContractError("LifParams: delta_t must be positive");
  }
};

// Membrane potentials of one layer. Holds the un-reset potential, so the
// next step's branch test sees whether the neuron just spiked.
struct LifState {
  std::vector<double> u;

  static LifState zeros(int n) { return LifState{std::vector<double>(n, 0.0)}; }
  int size() const { return static_cast<int>(u.size()); }
};

// T x N binary spike raster.
struct SpikeTrain {
  int steps = 0;
  int neurons = 0;
  std::vector<std::uint8_t> bits;  // steps*neurons, row-major, entries 0/1

  static SpikeTrain zeros(int steps, int neurons) {
    return SpikeTrain{steps, neurons,
                      std::vector<std::uint8_t>(static_cast<std::size_t>(steps) * neurons, 0)};
  }
  std::uint8_t at(int t, int n) const { return bits[static_cast<std::size_t>(t) * neurons + n]; }
  void set(int t, int n, std::uint8_t v) { bits[static_cast<std::size_t>(t) * neurons + n] = v; }
};

// One integration step for a whole layer. If a neuron's previous potential
// was at or below threshold it decays and integrates, otherwise the history
// is discarded (reset) and only the fresh input drives it:
//   U(t) = beta * U(t-1) + R * I(t)   if U(t-1) <= U_thr
//   U(t) = R * I(t)                   otherwise
// A spike is emitted exactly when the new potential strictly exceeds U_thr.
std::pair<LifState, std::vector<std::uint8_t>> lif_step(const LifState& state,
                                                        std::span<const double> current,
                                                        const LifParams& params);

// Input current of a layer: W (n_post x n_pre) applied to a binary spike
// vector of the presynaptic layer.
std::vector<double> input_current(const Tensor& weights, std::span<const std::uint8_t> spikes);

// Fused, differentiable version of the membrane update for batched training:
// u_prev and current are (neurons x batch). Gradients follow the branch that
// was taken; none flow through the branch condition.
Tensor membrane_update(Tape& tape, Tensor u_prev, Tensor current,
                       const LifParams& params);

namespace kernels {
// u_out[i] = u_prev[i] <= u_thr ? beta*u_prev[i] + r*c[i] : r*c[i]
void lif_update(const double* u_prev, const double* current, double* u_out, int n,
                const LifParams& params);
}

}  // namespace cmsnn
