#include <doctest.h>

#include <cmath>
#include <set>

#include "cmsnn/genome.hpp"
#include "cmsnn/rng.hpp"
#include "cmsnn/tensor.hpp"

using namespace cmsnn;

namespace {

BinaryGenome random_binary_genome(int neurons, int genes, Rng& rng, double x_density = 0.5,
                                  double o_density = 0.5) {
  BinaryGenome g;
  g.neurons = neurons;
  g.genes = genes;
  g.x.resize(static_cast<std::size_t>(neurons) * genes);
  g.o.resize(static_cast<std::size_t>(genes) * genes);
  for (auto& b : g.x) b = rng.bernoulli(x_density) ? 1 : 0;
  for (auto& p : g.o) p = rng.bernoulli(o_density) ? rng.uniform() : 0.0;
  return g;
}

Genome two_layer_genome(const Tensor& x_post, const Tensor& o, const Tensor& x_pre) {
  Genome g;
  g.widths = {x_pre.rows(), x_post.rows()};
  g.o = o.clone();
  g.o.set_requires_grad(true);
  g.x = Tensor::zeros(x_pre.rows() + x_post.rows(), o.rows(), true);
  for (int i = 0; i < x_pre.rows(); ++i) {
    for (int j = 0; j < x_pre.cols(); ++j) g.x.at(i, j) = x_pre.at(i, j);
  }
  for (int i = 0; i < x_post.rows(); ++i) {
    for (int j = 0; j < x_post.cols(); ++j) g.x.at(x_pre.rows() + i, j) = x_post.at(i, j);
  }
  return g;
}

}  // namespace

TEST_CASE("effective_weights") {
  SUBCASE("identity expression blocks expose the rule matrix") {
    Tensor o = Tensor::from_rows({{0.5, -1.0}, {2.0, 0.25}});
    Genome g = two_layer_genome(Tensor::identity(2), o, Tensor::identity(2));
    Tensor w = effective_weights(g, 1);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) CHECK(w.at(i, j) == o.at(i, j));
    }
  }
  SUBCASE("hand product") {
    Genome g = two_layer_genome(Tensor::from_rows({{1.0, 2.0}}), Tensor::identity(2),
                                Tensor::from_rows({{3.0, 4.0}}));
    CHECK(effective_weights(g, 1).scalar() == 11.0);
  }
  SUBCASE("one gene forces rank one") {
    Rng rng(5);
    Genome g = init_genome({3, 4, 3}, 1, rng);
    Tensor w = effective_weights(g, 1);  // 4 x 3
    for (int i = 1; i < w.rows(); ++i) {
      for (int j = 1; j < w.cols(); ++j) {
        const double det = w.at(0, 0) * w.at(i, j) - w.at(0, j) * w.at(i, 0);
        CHECK(std::abs(det) < 1e-12);
      }
    }
  }
  SUBCASE("invalid layer index") {
    Rng rng(6);
    Genome g = init_genome({2, 2}, 2, rng);
    CHECK_THROWS_AS(effective_weights(g, 0), ContractError);
    CHECK_THROWS_AS(effective_weights(g, 2), ContractError);
  }
}

TEST_CASE("connectome entry oracle") {
  SUBCASE("no expressed genes, no edges") {
    BinaryGenome g;
    g.neurons = 3;
    g.genes = 2;
    g.x.assign(6, 0);
    g.o.assign(4, 1.0);
    for (int u = 0; u < 3; ++u) {
      for (int v = 0; v < 3; ++v) CHECK(connectome_entry_oracle(g, u, v) == 0);
    }
  }
  SUBCASE("hand evaluation of the double sum") {
    BinaryGenome g;
    g.neurons = 2;
    g.genes = 2;
    g.x = {1, 0, 0, 1};          // X = I
    g.o = {0.0, 1.0, 0.0, 0.0};  // only O_01 > 0
    CHECK(connectome_entry_oracle(g, 0, 1) == 1);  // B_12 = H(1)
    CHECK(connectome_entry_oracle(g, 1, 0) == 0);  // B_21 = H(0)
  }
  SUBCASE("a shared positive rule forces an edge") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      BinaryGenome g = random_binary_genome(6, 3, rng);
      for (int k = 0; k < g.genes; ++k) {
        for (int l = 0; l < g.genes; ++l) {
          if (!(g.o_at(k, l) > 0.0)) continue;
          for (int u = 0; u < g.neurons; ++u) {
            for (int v = 0; v < g.neurons; ++v) {
              if (g.x_at(u, k) && g.x_at(v, l)) CHECK(connectome_entry_oracle(g, u, v) == 1);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("binary_connectome equals the entry oracle") {
  SUBCASE("no rules, empty graph") {
    Rng rng(8);
    BinaryGenome g = random_binary_genome(4, 2, rng);
    g.o.assign(g.o.size(), 0.0);
    const auto b = binary_connectome(g);
    for (auto e : b) CHECK(e == 0);
  }
  SUBCASE("identity expression exposes the rule support") {
    BinaryGenome g;
    g.neurons = 3;
    g.genes = 3;
    g.x = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    g.o = {0.7, 0.0, 0.2, 0.0, 0.0, 0.9, 0.0, 0.0, 0.0};
    const auto b = binary_connectome(g);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        CHECK(b[static_cast<std::size_t>(i) * 3 + j] == (g.o_at(i, j) > 0.0 ? 1 : 0));
      }
    }
  }
  SUBCASE("random instances match entry by entry") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 2 + static_cast<int>(rng.uniform_int(5));
      const int genes = 1 + static_cast<int>(rng.uniform_int(3));
      BinaryGenome g = random_binary_genome(n, genes, rng);
      const auto b = binary_connectome(g);
      for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
          CHECK(b[static_cast<std::size_t>(u) * n + v] == connectome_entry_oracle(g, u, v));
        }
      }
    }
  }
}

TEST_CASE("motif extraction") {
  SUBCASE("single rule yields one complete bipartite motif") {
    BinaryGenome g;
    g.neurons = 5;
    g.genes = 2;
    // gene 0 expressed by {0,1}, gene 1 by {2,3,4}
    g.x = {1, 0, 1, 0, 0, 1, 0, 1, 0, 1};
    g.o = {0.0, 0.8, 0.0, 0.0};  // rule (k=0, l=1)
    const auto motifs = extract_motifs(g);
    REQUIRE(motifs.size() == 1);
    CHECK(motifs[0].post_cluster == std::vector<int>{0, 1});
    CHECK(motifs[0].pre_cluster == std::vector<int>{2, 3, 4});
    // a * b edges, none inside a cluster
    const auto b = binary_connectome(g);
    int edges = 0;
    for (auto e : b) edges += e;
    CHECK(edges == 6);
    CHECK(b[0 * 5 + 1] == 0);
    CHECK(b[2 * 5 + 3] == 0);
  }
  SUBCASE("no rules, no motifs") {
    Rng rng(10);
    BinaryGenome g = random_binary_genome(4, 3, rng);
    g.o.assign(g.o.size(), 0.0);
    CHECK(extract_motifs(g).empty());
  }
  SUBCASE("motif union covers the connectome support exactly") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 2 + static_cast<int>(rng.uniform_int(6));
      const int genes = 1 + static_cast<int>(rng.uniform_int(4));
      BinaryGenome g = random_binary_genome(n, genes, rng, 0.4, 0.4);
      std::set<std::pair<int, int>> covered;
      for (const auto& m : extract_motifs(g)) {
        for (int u : m.post_cluster) {
          for (int v : m.pre_cluster) covered.insert({u, v});
        }
      }
      const auto b = binary_connectome(g);
      std::set<std::pair<int, int>> support;
      for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
          if (b[static_cast<std::size_t>(u) * n + v]) support.insert({u, v});
        }
      }
      CHECK(covered == support);
    }
  }
}

TEST_CASE("init_genome") {
  SUBCASE("shape bookkeeping") {
    Rng rng(12);
    Genome g = init_genome({4, 32, 3}, 8, rng);
    CHECK(g.x.rows() == 39);
    CHECK(g.x.cols() == 8);
    CHECK(g.o.rows() == 8);
    CHECK(g.o.cols() == 8);
    CHECK(g.layer_rows(1) == std::pair<int, int>{4, 36});
  }
  SUBCASE("effective weight variance tracks 1/n_max") {
    // widths {4, 32, 3}: n_max = 32, so Var(W) should be near 1/32
    double sum = 0.0, sum_sq = 0.0;
    long count = 0;
    Rng rng(13);
    while (count < 10000) {
      Genome g = init_genome({4, 32, 3}, 8, rng);
      const Tensor w = effective_weights(g, 2);  // 3 x 32
      for (int i = 0; i < w.size(); ++i) {
        sum += w.data()[i];
        sum_sq += w.data()[i] * w.data()[i];
        ++count;
      }
    }
    const double mean = sum / count;
    const double var = sum_sq / count - mean * mean;
    CHECK(var == doctest::Approx(1.0 / 32.0).epsilon(0.3));
  }
  SUBCASE("determinism") {
    Rng a(14), b(14);
    Genome ga = init_genome({4, 8, 3}, 4, a);
    Genome gb = init_genome({4, 8, 3}, 4, b);
    for (int i = 0; i < ga.x.size(); ++i) CHECK(ga.x.data()[i] == gb.x.data()[i]);
    for (int i = 0; i < ga.o.size(); ++i) CHECK(ga.o.data()[i] == gb.o.data()[i]);
  }
  SUBCASE("contract checks") {
    Rng rng(15);
    CHECK_THROWS_AS(init_genome({4, 8, 3}, 0, rng), ContractError);
    CHECK_THROWS_AS(init_genome({4}, 2, rng), ContractError);
  }
}

TEST_CASE("genome product gradients match finite differences") {
  Rng rng(16);
  Genome g = init_genome({3, 4, 2}, 3, rng);
  const int layer = 1;
  Tape tape;
  tape.backward(tape.sum(effective_weights_on_tape(tape, g, layer)));

  auto loss_with_x = [&](const Tensor& probe) {
    Genome g2 = g;
    g2.x = probe.clone();
    g2.x.set_requires_grad(true);
    Tape t;
    return t.sum(effective_weights_on_tape(t, g2, layer)).scalar();
  };
  auto loss_with_o = [&](const Tensor& probe) {
    Genome g2 = g;
    g2.o = probe.clone();
    g2.o.set_requires_grad(true);
    Tape t;
    return t.sum(effective_weights_on_tape(t, g2, layer)).scalar();
  };
  const Tensor fd_x = finite_difference_gradient(loss_with_x, g.x);
  const Tensor fd_o = finite_difference_gradient(loss_with_o, g.o);
  for (int i = 0; i < g.x.size(); ++i) {
    const double got = g.x.has_grad() ? g.x.grad()[i] : 0.0;
    CHECK(std::abs(got - fd_x.data()[i]) <
          1e-5 * std::max(1.0, std::abs(fd_x.data()[i])));
  }
  for (int i = 0; i < g.o.size(); ++i) {
    CHECK(std::abs(g.o.grad()[i] - fd_o.data()[i]) <
          1e-5 * std::max(1.0, std::abs(fd_o.data()[i])));
  }
}

TEST_CASE("binarized effective weights match the connectome block") {
  // with binary X and probabilities O, H(X^l O X^{l-1}^T) is the block of
  // H(X O X^T) for the layer pair
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    BinaryGenome bg = random_binary_genome(7, 3, rng, 0.5, 0.6);
    Genome g;
    g.widths = {4, 3};  // neurons 0..3 presynaptic, 4..6 postsynaptic
    g.x = Tensor::zeros(7, 3, true);
    g.o = Tensor::zeros(3, 3, true);
    for (int i = 0; i < g.x.size(); ++i) g.x.data()[i] = bg.x[i];
    for (int i = 0; i < g.o.size(); ++i) g.o.data()[i] = bg.o[i];

    const Tensor w = effective_weights(g, 1);  // 3 x 4
    const auto b = binary_connectome(bg);
    for (int u = 0; u < 3; ++u) {
      for (int v = 0; v < 4; ++v) {
        const int via_w = w.at(u, v) > 0.0 ? 1 : 0;
        CHECK(via_w == static_cast<int>(b[static_cast<std::size_t>(u + 4) * 7 + v]));
      }
    }
  }
}

TEST_CASE("binarize utility") {
  Rng rng(18);
  Genome g = init_genome({2, 3}, 2, rng);
  const BinaryGenome b = binarize(g);
  b.validate();
  for (int i = 0; i < g.x.size(); ++i) CHECK(b.x[i] == (g.x.data()[i] > 0.0 ? 1 : 0));
}

TEST_CASE("genome json round trip") {
  Rng rng(19);
  Genome g = init_genome({4, 8, 3}, 4, rng);
  g.init_seed = 19;
  const Genome back = genome_from_json(genome_to_json(g));
  CHECK(back.widths == g.widths);
  CHECK(back.init_seed == g.init_seed);
  for (int i = 0; i < g.x.size(); ++i) CHECK(back.x.data()[i] == g.x.data()[i]);
  for (int i = 0; i < g.o.size(); ++i) CHECK(back.o.data()[i] == g.o.data()[i]);
}
