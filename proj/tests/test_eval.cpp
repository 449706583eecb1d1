#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cmsnn/eval.hpp"
#include "cmsnn/rng.hpp"
#include "cmsnn/train.hpp"

using namespace cmsnn;

TEST_CASE("predict") {
  SUBCASE("argmax of counts") {
    const std::vector<double> counts{90, 3, 7};
    CHECK(predict_counts(counts) == 0);
  }
  SUBCASE("ties resolve to the lowest class") {
    const std::vector<double> counts{5, 5, 2};
    CHECK(predict_counts(counts) == 0);
  }
  SUBCASE("an all-quiet train predicts class 0") {
    CHECK(predict(SpikeTrain::zeros(10, 3)) == 0);
  }
  SUBCASE("spike train counting") {
    SpikeTrain out = SpikeTrain::zeros(5, 3);
    out.set(0, 2, 1);
    out.set(1, 2, 1);
    out.set(2, 1, 1);
    CHECK(predict(out) == 2);
  }
}

namespace {

struct Fixture {
  DatasetSplit test = generate_split("test", 60, 40);
  LifParams lif{0.9, 1.0, 1.0, 1.0};

  Model mlp() {
    Rng rng(1);
    return make_mlp("mlp", {4, 8, 3}, lif, rng);
  }
  Model hw() {
    Rng rng(2);
    return make_mlp("mlp-hw-aware", {4, 8, 3}, lif, rng, true, 0.1);
  }
  Model cm() {
    Rng rng(3);
    return make_cm("cm-g4", {4, 8, 3}, 4, lif, rng);
  }
};

}  // namespace

TEST_CASE("simulate_chips") {
  Fixture fx;
  SUBCASE("contract checks") {
    DatasetSplit empty;
    CHECK_THROWS_AS(simulate_chips(fx.mlp(), empty, 0.1, 3, 1), ContractError);
    CHECK_THROWS_AS(simulate_chips(fx.mlp(), fx.test, -0.1, 3, 1), ContractError);
    CHECK_THROWS_AS(simulate_chips(fx.mlp(), fx.test, 0.1, 0, 1), ContractError);
  }
  SUBCASE("shape of the trial list") {
    ChipOptions opts;
    opts.t_steps = 30;
    const auto trials = simulate_chips(fx.mlp(), fx.test, 0.1, 5, 77, opts);
    REQUIRE(trials.size() == 5);
    for (int c = 0; c < 5; ++c) {
      CHECK(trials[c].chip == c);
      CHECK(trials[c].seed == (77ULL ^ static_cast<std::uint64_t>(c)));
      CHECK(trials[c].accuracy >= 0.0);
      CHECK(trials[c].accuracy <= 1.0);
      REQUIRE(trials[c].errors.size() == 2);
      CHECK(trials[c].errors[0].rows() == 8);
      CHECK(trials[c].errors[0].cols() == 4);
    }
  }
  SUBCASE("determinism and chip independence from n_chips") {
    ChipOptions opts;
    opts.t_steps = 30;
    const auto a = simulate_chips(fx.mlp(), fx.test, 0.1, 4, 123, opts);
    const auto b = simulate_chips(fx.mlp(), fx.test, 0.1, 4, 123, opts);
    for (int c = 0; c < 4; ++c) CHECK(a[c].accuracy == b[c].accuracy);
    // chips derive their own seeds, so a longer run extends the shorter one
    const auto longer = simulate_chips(fx.mlp(), fx.test, 0.1, 6, 123, opts);
    for (int c = 0; c < 4; ++c) CHECK(longer[c].accuracy == a[c].accuracy);
  }
  SUBCASE("parallel evaluation reproduces sequential results") {
    ChipOptions seq_opts;
    seq_opts.t_steps = 30;
    ChipOptions par_opts = seq_opts;
    par_opts.jobs = 3;
    const auto seq = simulate_chips(fx.cm(), fx.test, 0.1, 6, 55, seq_opts);
    const auto par = simulate_chips(fx.cm(), fx.test, 0.1, 6, 55, par_opts);
    for (int c = 0; c < 6; ++c) CHECK(seq[c].accuracy == par[c].accuracy);
  }
  SUBCASE("zero noise with frozen encodings equals the clean evaluation bit for bit") {
    ChipOptions opts;
    opts.t_steps = 30;
    opts.freeze_encodings = true;
    const std::uint64_t base = 991;
    for (Model model : {fx.mlp(), fx.hw(), fx.cm()}) {
      const auto trials = simulate_chips(model, fx.test, 0.0, 3, base, opts);
      const double clean =
          evaluate_clean(model, fx.test, 30, derive_seed(base, "frozen-enc"));
      for (const auto& t : trials) CHECK(t.accuracy == clean);
    }
  }
  SUBCASE("noise hurts or matches the clean accuracy on average") {
    ChipOptions opts;
    opts.t_steps = 30;
    const auto trials = simulate_chips(fx.mlp(), fx.test, 0.5, 10, 7, opts);
    for (const auto& t : trials) {
      CHECK(t.accuracy >= 0.0);
      CHECK(t.accuracy <= 1.0);
    }
  }
}

TEST_CASE("summarize") {
  auto mk = [](const std::string& name, std::vector<double> accs) {
    ModelSummary m;
    m.model = name;
    m.hidden = 32;
    m.accuracies = std::move(accs);
    return m;
  };
  SUBCASE("single model, no tests") {
    const EvalReport r = summarize({mk("mlp", {0.9, 0.92, 0.91})}, 0.1, 3, 32);
    CHECK(r.models.size() == 1);
    CHECK(r.tests.empty());
    CHECK(r.models[0].box.median == 0.91);
  }
  SUBCASE("clearly separated distributions are significant after adjustment") {
    std::vector<double> a(30), b(30);
    for (int i = 0; i < 30; ++i) {
      a[i] = 0.9 + 1e-4 * i;
      b[i] = 0.8 + 1e-4 * i;
    }
    const EvalReport r = summarize({mk("good", a), mk("bad", b)}, 0.1, 30, 32);
    REQUIRE(r.tests.size() == 1);
    CHECK(r.models[0].box.median - r.models[1].box.median == doctest::Approx(0.1));
    CHECK(r.tests[0].p_adjusted < 0.001);
    CHECK(r.find("good") != nullptr);
    CHECK(r.find_test("bad", "good") != nullptr);
  }
  SUBCASE("identical vectors give adjusted p = 1") {
    std::vector<double> a(30, 0.85);
    const EvalReport r = summarize({mk("a", a), mk("b", a)}, 0.1, 30, 32);
    CHECK(r.tests[0].p_adjusted == 1.0);
  }
  SUBCASE("unequal lengths are a contract error") {
    CHECK_THROWS_AS(summarize({mk("a", {0.9, 0.8}), mk("b", {0.7})}, 0.1, 2, 32),
                    ContractError);
  }
  SUBCASE("bonferroni m defaults to the pair count") {
    // 3 models -> 3 pairs; a raw p is tripled
    std::vector<double> a(10), b(10), c(10);
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
      a[i] = rng.uniform();
      b[i] = rng.uniform();
      c[i] = rng.uniform();
    }
    const EvalReport r = summarize({mk("a", a), mk("b", b), mk("c", c)}, 0.1, 10, 32);
    REQUIRE(r.tests.size() == 3);
    for (const auto& t : r.tests) {
      CHECK(t.p_adjusted == doctest::Approx(std::min(1.0, 3.0 * t.p_raw)));
    }
  }
}

TEST_CASE("chip trials are exchangeable") {
  // permuting chip indices permutes accuracies without changing the multiset
  Fixture fx;
  ChipOptions opts;
  opts.t_steps = 25;
  const auto trials = simulate_chips(fx.mlp(), fx.test, 0.1, 8, 2025, opts);
  std::vector<double> accs;
  for (const auto& t : trials) accs.push_back(t.accuracy);
  std::vector<double> sorted_accs = accs;
  std::sort(sorted_accs.begin(), sorted_accs.end());
  // rerunning individual chips reproduces their accuracy regardless of order
  for (int c : {5, 1, 7}) {
    ChipOptions single = opts;
    const auto redo = simulate_chips(fx.mlp(), fx.test, 0.1, c + 1, 2025, single);
    CHECK(redo[c].accuracy == accs[c]);
  }
  CHECK(std::is_sorted(sorted_accs.begin(), sorted_accs.end()));
}
