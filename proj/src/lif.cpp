#include "cmsnn/lif.hpp"

#include <string>

namespace cmsnn {

namespace kernels {

void lif_update(const double* u_prev, const double* current, double* u_out, int n,
                const LifParams& params) {
  const double beta = params.beta, r = params.r, thr = params.u_thr;
  for (int i = 0; i < n; ++i) {
    const double integrated = beta * u_prev[i] + r * current[i];
    const double reset = r * current[i];
    u_out[i] = u_prev[i] <= thr ? integrated : reset;
  }
}

}  // namespace kernels

std::pair<LifState, std::vector<std::uint8_t>> lif_step(const LifState& state,
                                                        std::span<const double> current,
                                                        const LifParams& params) {
  if (state.u.size() != current.size()) {
    throw ShapeError("lif_step: state has " + std::to_string(state.u.size()) +
                     " neurons, current has " + std::to_string(current.size()));
  }
  LifState next;
  next.u.resize(state.u.size());
  kernels::lif_update(state.u.data(), current.data(), next.u.data(),
                      static_cast<int>(state.u.size()), params);
  std::vector<std::uint8_t> spikes(state.u.size());
  for (std::size_t i = 0; i < next.u.size(); ++i) {
    spikes[i] = next.u[i] > params.u_thr ? 1 : 0;
  }
  return {std::move(next), std::move(spikes)};
}

std::vector<double> input_current(const Tensor& weights, std::span<const std::uint8_t> spikes) {
  if (weights.cols() != static_cast<int>(spikes.size())) {
    throw ShapeError("input_current: weights " + shape_str(weights.rows(), weights.cols()) +
                     " applied to spike vector of length " + std::to_string(spikes.size()));
  }
  std::vector<double> current(weights.rows(), 0.0);
  for (int i = 0; i < weights.rows(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < weights.cols(); ++j) {
      if (spikes[j]) acc += weights.at(i, j);
    }
    current[i] = acc;
  }
  return current;
}

Tensor membrane_update(Tape& tape, Tensor u_prev, Tensor current,
                       const LifParams& params) {
  if (u_prev.rows() != current.rows() || u_prev.cols() != current.cols()) {
    throw ShapeError("membrane_update: " + shape_str(u_prev.rows(), u_prev.cols()) + " vs " +
                     shape_str(current.rows(), current.cols()));
  }
  Tensor out = Tensor::uninit(u_prev.rows(), u_prev.cols());
  const int n = out.size();
  kernels::lif_update(u_prev.data(), current.data(), out.data(), n, params);
  return tape.record_custom({u_prev, current}, out, [u_prev, current, out, params, n]() mutable {
    const double* g = out.grad().data();
    if (u_prev.requires_grad()) {
      double* gu = u_prev.ensure_grad().data();
      const double* up = u_prev.data();
      const double beta = params.beta, thr = params.u_thr;
      for (int i = 0; i < n; ++i) {
        if (up[i] <= thr) gu[i] += g[i] * beta;  // reset branch blocks the history path
      }
    }
    if (current.requires_grad()) {
      double* gc = current.ensure_grad().data();
      const double r = params.r;
      for (int i = 0; i < n; ++i) gc[i] += g[i] * r;
    }
  });
}

}  // namespace cmsnn
