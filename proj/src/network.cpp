#include "cmsnn/network.hpp"

#include <cmath>
#include <numeric>

namespace cmsnn {

std::string family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::cm: return "cm";
    case ModelFamily::mlp: return "mlp";
    case ModelFamily::mlp_hw_aware: return "mlp-hw-aware";
  }
  throw ContractError("family_name: invalid family tag");
}

ModelFamily family_from_name(const std::string& name) {
  if (name == "cm") return ModelFamily::cm;
  if (name == "mlp") return ModelFamily::mlp;
  if (name == "mlp-hw-aware") return ModelFamily::mlp_hw_aware;
  throw ContractError("unknown model family '" + name + "'");
}

std::vector<Tensor> Model::parameters() const {
  if (family == ModelFamily::cm) return {genome.x, genome.o};
  return weights;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += static_cast<std::size_t>(p.size());
  return n;
}

std::vector<Tensor> Model::layer_weight_values() const {
  std::vector<Tensor> out;
  out.reserve(widths.size() - 1);
  if (family == ModelFamily::cm) {
    for (int l = 1; l < layer_count(); ++l) out.push_back(effective_weights(genome, l));
  } else {
    out = weights;
  }
  return out;
}

Model make_mlp(const std::string& name, const std::vector<int>& widths, const LifParams& lif,
               Rng& rng, bool hw_aware, double alpha_train) {
  if (widths.size() < 2) throw ContractError("make_mlp: need at least 2 layers");
  lif.validate();
  Model m;
  m.family = hw_aware ? ModelFamily::mlp_hw_aware : ModelFamily::mlp;
  m.name = name;
  m.widths = widths;
  m.lif = lif;
  m.alpha_train = hw_aware ? alpha_train : 0.0;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    Tensor w = Tensor::zeros(widths[l], widths[l - 1], /*requires_grad=*/true);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(widths[l - 1]));
    for (int i = 0; i < w.size(); ++i) w.data()[i] = rng.normal(0.0, stddev);
    m.weights.push_back(w);
  }
  return m;
}

Model make_cm(const std::string& name, const std::vector<int>& widths, int genes,
              const LifParams& lif, Rng& rng) {
  if (widths.size() < 2) throw ContractError("make_cm: need at least 2 layers");
  lif.validate();
  Model m;
  m.family = ModelFamily::cm;
  m.name = name;
  m.widths = widths;
  m.lif = lif;
  m.genome = init_genome(widths, genes, rng);
  return m;
}

Model clone_model(const Model& model) {
  Model copy = model;
  if (copy.family == ModelFamily::cm) {
    copy.genome.x = model.genome.x.clone();
    copy.genome.o = model.genome.o.clone();
  } else {
    copy.weights.clear();
    for (const auto& w : model.weights) copy.weights.push_back(w.clone());
  }
  return copy;
}

std::vector<Tensor> sample_mismatch(const std::vector<Tensor>& weights, double alpha, Rng& rng,
                                    bool literal_mean) {
  if (alpha < 0.0) throw ContractError("sample_mismatch: alpha must be >= 0");
  std::vector<Tensor> errors;
  errors.reserve(weights.size());
  for (const auto& w : weights) {
    Tensor e = Tensor::zeros(w.rows(), w.cols());
    for (int i = 0; i < w.size(); ++i) {
      const double wv = w.data()[i];
      const double mean = literal_mean ? wv : 0.0;
      e.data()[i] = mean + alpha * std::abs(wv) * rng.normal();
    }
    errors.push_back(e);
  }
  return errors;
}

namespace {

void check_forward_input(const Model& model, const SpikeTrain& input) {
  if (input.steps <= 0) throw ContractError("forward: input train must have T >= 1 steps");
  if (input.neurons != model.input_width()) {
    throw ShapeError("forward: input has " + std::to_string(input.neurons) +
                     " channels, network expects " + std::to_string(model.input_width()));
  }
}

SpikeTrain run_forward(const Model& model, const SpikeTrain& input,
                       const std::vector<Tensor>& weights) {
  const int layers = model.layer_count();
  std::vector<LifState> states;
  for (int l = 1; l < layers; ++l) states.push_back(LifState::zeros(model.widths[l]));

  SpikeTrain output = SpikeTrain::zeros(input.steps, model.output_width());
  std::vector<std::uint8_t> x;
  for (int t = 0; t < input.steps; ++t) {
    x.assign(input.bits.begin() + static_cast<std::size_t>(t) * input.neurons,
             input.bits.begin() + static_cast<std::size_t>(t + 1) * input.neurons);
    for (int l = 1; l < layers; ++l) {
      const auto current = input_current(weights[l - 1], x);
      auto [next, spikes] = lif_step(states[l - 1], current, model.lif);
      states[l - 1] = std::move(next);
      x = std::move(spikes);
    }
    for (int n = 0; n < output.neurons; ++n) output.set(t, n, x[n]);
  }
  return output;
}

}  // namespace

SpikeTrain forward(const Model& model, const SpikeTrain& input) {
  check_forward_input(model, input);
  return run_forward(model, input, model.layer_weight_values());
}

SpikeTrain forward_noisy(const Model& model, const SpikeTrain& input, double alpha, Rng& rng) {
  check_forward_input(model, input);
  if (alpha < 0.0) throw ContractError("forward_noisy: alpha must be >= 0");
  auto weights = model.layer_weight_values();
  const auto errors = sample_mismatch(weights, alpha, rng, model.noise_literal_mean);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Tensor perturbed = weights[l].clone();
    for (int i = 0; i < perturbed.size(); ++i) perturbed.data()[i] += errors[l].data()[i];
    weights[l] = perturbed;
  }
  return run_forward(model, input, weights);
}

Tensor forward_counts(const std::vector<Tensor>& weights, const LifParams& lif,
                      const std::vector<Tensor>& input_steps,
                      const std::vector<Tensor>* mismatch) {
  if (input_steps.empty()) throw ContractError("forward_counts: need T >= 1 steps");
  const int batch = input_steps.front().cols();
  const int layers = static_cast<int>(weights.size()) + 1;

  std::vector<Tensor> effective = weights;
  if (mismatch != nullptr) {
    for (std::size_t l = 0; l < effective.size(); ++l) {
      Tensor w = effective[l].clone();
      for (int i = 0; i < w.size(); ++i) w.data()[i] += (*mismatch)[l].data()[i];
      effective[l] = w;
    }
  }

  std::vector<Tensor> u, spikes;
  for (int l = 1; l < layers; ++l) {
    u.push_back(Tensor::zeros(effective[l - 1].rows(), batch));
    spikes.push_back(Tensor::zeros(effective[l - 1].rows(), batch));
  }
  Tensor counts = Tensor::zeros(effective.back().rows(), batch);
  Tensor current;
  for (const auto& step : input_steps) {
    const Tensor* x = &step;
    for (int l = 1; l < layers; ++l) {
      const Tensor& w = effective[l - 1];
      if (w.cols() != x->rows()) {
        throw ShapeError("forward_counts: layer " + std::to_string(l) + " expects " +
                         std::to_string(w.cols()) + " inputs, got " + std::to_string(x->rows()));
      }
      current = Tensor::zeros(w.rows(), batch);
      kernels::matmul_nn(w.data(), x->data(), current.data(), w.rows(), w.cols(), batch);
      Tensor& u_l = u[l - 1];
      Tensor next_u = Tensor::uninit(u_l.rows(), batch);
      kernels::lif_update(u_l.data(), current.data(), next_u.data(), next_u.size(), lif);
      u[l - 1] = next_u;
      Tensor& s = spikes[l - 1];
      for (int i = 0; i < s.size(); ++i) s.data()[i] = next_u.data()[i] > lif.u_thr ? 1.0 : 0.0;
      x = &s;
    }
    for (int i = 0; i < counts.size(); ++i) counts.data()[i] += x->data()[i];
  }
  return counts;
}

std::vector<Tensor> forward_on_tape(Tape& tape, const Model& model,
                                    const std::vector<Tensor>& input_steps,
                                    const std::vector<Tensor>* mismatch) {
  if (input_steps.empty()) throw ContractError("forward_on_tape: need T >= 1 steps");
  const int batch = input_steps.front().cols();
  const int layers = model.layer_count();

  std::vector<Tensor> effective;
  if (model.family == ModelFamily::cm) {
    for (int l = 1; l < layers; ++l) {
      effective.push_back(effective_weights_on_tape(tape, model.genome, l));
    }
  } else {
    effective = model.weights;
  }
  if (mismatch != nullptr) {
    for (int l = 0; l < layers - 1; ++l) effective[l] = tape.add(effective[l], (*mismatch)[l]);
  }

  std::vector<Tensor> u;
  for (int l = 1; l < layers; ++l) u.push_back(Tensor::zeros(model.widths[l], batch));

  std::vector<Tensor> outputs;
  outputs.reserve(input_steps.size());
  for (const auto& step : input_steps) {
    if (step.rows() != model.input_width()) {
      throw ShapeError("forward_on_tape: input step has " + std::to_string(step.rows()) +
                       " channels, network expects " + std::to_string(model.input_width()));
    }
    Tensor x = step;
    for (int l = 1; l < layers; ++l) {
      Tensor current = tape.matmul(effective[l - 1], x);
      u[l - 1] = membrane_update(tape, u[l - 1], current, model.lif);
      x = tape.spike_threshold(u[l - 1], model.lif.u_thr, model.surrogate_slope);
    }
    outputs.push_back(x);
  }
  return outputs;
}

std::vector<Tensor> batch_input_steps(const std::vector<SpikeTrain>& trains) {
  if (trains.empty()) throw ContractError("batch_input_steps: empty batch");
  const int steps = trains.front().steps;
  const int n = trains.front().neurons;
  const int batch = static_cast<int>(trains.size());
  for (const auto& tr : trains) {
    if (tr.steps != steps || tr.neurons != n) {
      throw ShapeError("batch_input_steps: inconsistent train shapes in batch");
    }
  }
  std::vector<Tensor> out;
  out.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    Tensor step = Tensor::zeros(n, batch);
    for (int b = 0; b < batch; ++b) {
      for (int i = 0; i < n; ++i) {
        step.at(i, b) = trains[static_cast<std::size_t>(b)].at(t, i) ? 1.0 : 0.0;
      }
    }
    out.push_back(step);
  }
  return out;
}

}  // namespace cmsnn
