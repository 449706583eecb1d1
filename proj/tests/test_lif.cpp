#include <doctest.h>

#include <cmath>

#include "cmsnn/lif.hpp"
#include "cmsnn/network.hpp"
#include "cmsnn/rng.hpp"

using namespace cmsnn;

TEST_CASE("lif_step hand traces") {
  LifParams p{0.9, 1.0, 1.0, 1.0};
  SUBCASE("rest state stays at rest") {
    LifState s = LifState::zeros(1);
    const std::vector<double> zero{0.0};
    auto [next, spikes] = lif_step(s, zero, p);
    CHECK(next.u[0] == 0.0);
    CHECK(spikes[0] == 0);
  }
  SUBCASE("integrate branch crosses the threshold") {
    LifState s{{0.5}};
    const std::vector<double> current{0.6};
    auto [next, spikes] = lif_step(s, current, p);
    CHECK(next.u[0] == doctest::Approx(1.05).epsilon(1e-15));
    CHECK(spikes[0] == 1);
  }
  SUBCASE("reset branch discards the history") {
    LifState s{{1.05}};  // spiked last step
    const std::vector<double> current{0.6};
    auto [next, spikes] = lif_step(s, current, p);
    CHECK(next.u[0] == 0.6);
    CHECK(spikes[0] == 0);
  }
  SUBCASE("length mismatch") {
    LifState s = LifState::zeros(2);
    const std::vector<double> current{0.0};
    CHECK_THROWS_AS(lif_step(s, current, p), ShapeError);
  }
}

TEST_CASE("lif params invariants") {
  CHECK_THROWS_AS((LifParams{1.0, 1.0, 1.0, 1.0}.validate()), ContractError);
  CHECK_THROWS_AS((LifParams{0.9, 1.0, 0.0, 1.0}.validate()), ContractError);
  LifParams p{0.9, 1.0, 1.0, 1.0};
  p.validate();
  // beta = 1 - delta_t / tau holds exactly for the derived tau
  CHECK(1.0 - p.delta_t / p.tau() == doctest::Approx(p.beta).epsilon(1e-15));
}

TEST_CASE("input_current") {
  Tensor w = Tensor::from_rows({{1.0, -2.0}, {0.0, 3.0}});
  SUBCASE("no input spikes, no current") {
    const std::vector<std::uint8_t> x{0, 0};
    const auto c = input_current(w, x);
    CHECK(c[0] == 0.0);
    CHECK(c[1] == 0.0);
  }
  SUBCASE("hand product") {
    const std::vector<std::uint8_t> x{1, 1};
    const auto c = input_current(w, x);
    CHECK(c[0] == -1.0);
    CHECK(c[1] == 3.0);
  }
  SUBCASE("unit vector selects a column") {
    const std::vector<std::uint8_t> e1{0, 1};
    const auto c = input_current(w, e1);
    CHECK(c[0] == -2.0);
    CHECK(c[1] == 3.0);
  }
  SUBCASE("length mismatch") {
    const std::vector<std::uint8_t> x{1};
    CHECK_THROWS_AS(input_current(w, x), ShapeError);
  }
}

namespace {

Model single_neuron_chain(double w) {
  Rng rng(1);
  Model m = make_mlp("tiny", {1, 1}, LifParams{0.9, 1.0, 1.0, 1.0}, rng);
  m.weights[0].data()[0] = w;
  return m;
}

}  // namespace

TEST_CASE("forward pass") {
  SUBCASE("quiescent network stays quiet") {
    Rng rng(2);
    Model m = make_mlp("mlp", {4, 8, 3}, LifParams{0.9, 1.0, 1.0, 1.0}, rng);
    const SpikeTrain input = SpikeTrain::zeros(20, 4);
    const SpikeTrain out = forward(m, input);
    for (auto b : out.bits) CHECK(b == 0);
  }
  SUBCASE("supra-threshold drive spikes every step") {
    Model m = single_neuron_chain(2.0);
    SpikeTrain input = SpikeTrain::zeros(5, 1);
    for (int t = 0; t < 5; ++t) input.set(t, 0, 1);
    const SpikeTrain out = forward(m, input);
    // U jumps to 2 > 1 at t=1; the reset branch feeds it back to 2 forever
    for (int t = 0; t < 5; ++t) CHECK(out.at(t, 0) == 1);
  }
  SUBCASE("T = 0 is a contract error") {
    Model m = single_neuron_chain(2.0);
    CHECK_THROWS_AS(forward(m, SpikeTrain::zeros(0, 1)), ContractError);
  }
  SUBCASE("width mismatch is a shape error") {
    Model m = single_neuron_chain(2.0);
    CHECK_THROWS_AS(forward(m, SpikeTrain::zeros(5, 3)), ShapeError);
  }
  SUBCASE("genome-backed and direct nets with equal weights agree bit for bit") {
    Rng rng(3);
    Model cm = make_cm("cm", {4, 6, 3}, 5, LifParams{0.9, 1.0, 1.0, 1.0}, rng);
    Model mlp = make_mlp("mlp", {4, 6, 3}, LifParams{0.9, 1.0, 1.0, 1.0}, rng);
    const auto effective = cm.layer_weight_values();
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
      std::copy(effective[l].data(), effective[l].data() + effective[l].size(),
                mlp.weights[l].data());
    }
    Rng enc(9);
    SpikeTrain input = SpikeTrain::zeros(50, 4);
    for (auto& b : input.bits) b = enc.bernoulli(0.5) ? 1 : 0;
    CHECK(forward(cm, input).bits == forward(mlp, input).bits);
  }
}

TEST_CASE("membrane reset semantics on random traces") {
  Rng rng(13);
  const LifParams p{0.9, 1.0, 1.0, 1.0};
  for (int trial = 0; trial < 50; ++trial) {
    LifState state = LifState::zeros(3);
    for (int t = 0; t < 40; ++t) {
      std::vector<double> current(3);
      for (auto& c : current) c = rng.uniform() * 2.0;
      const LifState prev = state;
      auto [next, spikes] = lif_step(state, current, p);
      for (int n = 0; n < 3; ++n) {
        if (prev.u[n] > p.u_thr) {
          // spiked last step: potential is exactly R * I, history gone
          CHECK(next.u[n] == p.r * current[n]);
        }
        CHECK(spikes[n] == (next.u[n] > p.u_thr ? 1 : 0));
      }
      state = std::move(next);
    }
  }
}

TEST_CASE("geometric no-spike bound") {
  // non-negative weights and inputs with R * I_max <= U_thr * (1 - beta)
  // keep the potential at or below threshold forever
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const double beta = 0.5 + 0.4 * rng.uniform();
    const LifParams p{beta, 1.0, 1.0, 1.0};
    const int width = 1 + static_cast<int>(rng.uniform_int(4));
    Rng wrng(rng.next_u64());
    Model m = make_mlp("bound", {width, width}, p, wrng);
    const double budget = p.u_thr * (1.0 - beta) / width;
    for (int i = 0; i < m.weights[0].size(); ++i) {
      m.weights[0].data()[i] = rng.uniform() * budget;
    }
    SpikeTrain input = SpikeTrain::zeros(60, width);
    for (auto& b : input.bits) b = rng.bernoulli(0.7) ? 1 : 0;
    const SpikeTrain out = forward(m, input);
    for (auto b : out.bits) CHECK(b == 0);
  }
}

TEST_CASE("forward_noisy") {
  Rng rng(19);
  Model m = make_mlp("mlp", {4, 8, 3}, LifParams{0.9, 1.0, 1.0, 1.0}, rng);
  SpikeTrain input = SpikeTrain::zeros(30, 4);
  for (auto& b : input.bits) b = rng.bernoulli(0.5) ? 1 : 0;

  SUBCASE("alpha = 0 reproduces the noiseless pass bit for bit") {
    Rng noise(100);
    CHECK(forward_noisy(m, input, 0.0, noise).bits == forward(m, input).bits);
  }
  SUBCASE("negative alpha is a contract error") {
    Rng noise(100);
    CHECK_THROWS_AS(forward_noisy(m, input, -0.1, noise), ContractError);
  }
  SUBCASE("zero weight stays exactly zero under noise") {
    Tensor w = Tensor::from_rows({{0.0, 1.0}, {2.0, 0.0}});
    Rng noise(5);
    const auto errors = sample_mismatch({w}, 0.1, noise);
    CHECK(errors[0].at(0, 0) == 0.0);
    CHECK(errors[0].at(1, 1) == 0.0);
    CHECK(errors[0].at(0, 1) != 0.0);
  }
  SUBCASE("empirical std of the effective weight tracks alpha |w|") {
    const double w = -0.8, alpha = 0.1;
    Tensor wt = Tensor::full(1, 1, w);
    Rng noise(7);
    double sum = 0.0, sum_sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const auto e = sample_mismatch({wt}, alpha, noise);
      const double eff = w + e[0].scalar();
      sum += eff;
      sum_sq += eff * eff;
    }
    const double mean = sum / n;
    const double stddev = std::sqrt(sum_sq / n - mean * mean);
    CHECK(stddev == doctest::Approx(alpha * std::abs(w)).epsilon(0.03));
  }
  SUBCASE("literal-mean sampling doubles the effective mean") {
    Tensor wt = Tensor::full(1, 1, 1.0);
    Rng noise(11);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const auto e = sample_mismatch({wt}, 0.1, noise, /*literal_mean=*/true);
      sum += 1.0 + e[0].scalar();
    }
    CHECK(sum / n == doctest::Approx(2.0).epsilon(0.01));
  }
}

TEST_CASE("membrane_update gradients follow the taken branch") {
  Tensor u_prev = Tensor::from_rows({{0.4, 1.3, 0.9}});
  u_prev.set_requires_grad(true);
  Tensor current = Tensor::from_rows({{0.2, 0.5, -0.1}});
  current.set_requires_grad(true);
  const LifParams p{0.9, 1.0, 1.0, 1.0};

  Tape tape;
  tape.backward(tape.sum(membrane_update(tape, u_prev, current, p)));

  // du/du_prev = beta below threshold, 0 above; du/dI = R either way
  CHECK(u_prev.grad()[0] == doctest::Approx(0.9));
  CHECK(u_prev.grad()[1] == doctest::Approx(0.0));
  CHECK(u_prev.grad()[2] == doctest::Approx(0.9));
  for (int i = 0; i < 3; ++i) CHECK(current.grad()[i] == doctest::Approx(1.0));
}

TEST_CASE("batched tape forward agrees with the sequential inference path") {
  Rng rng(23);
  Model m = make_mlp("mlp", {4, 6, 3}, LifParams{0.9, 1.0, 1.0, 1.0}, rng);
  std::vector<SpikeTrain> batch;
  Rng enc(29);
  for (int b = 0; b < 5; ++b) {
    SpikeTrain train = SpikeTrain::zeros(25, 4);
    for (auto& bit : train.bits) bit = enc.bernoulli(0.4) ? 1 : 0;
    batch.push_back(train);
  }
  const auto steps = batch_input_steps(batch);
  Tape tape;
  const auto outputs = forward_on_tape(tape, m, steps);
  for (int b = 0; b < 5; ++b) {
    const SpikeTrain ref = forward(m, batch[b]);
    for (int t = 0; t < 25; ++t) {
      for (int n = 0; n < 3; ++n) {
        CHECK(outputs[t].at(n, b) == static_cast<double>(ref.at(t, n)));
      }
    }
  }
}
