#include "cmsnn/genome.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "cmsnn/errors.hpp"

namespace cmsnn {

std::pair<int, int> Genome::layer_rows(int layer) const {
  if (layer < 0 || layer >= layer_count()) {
    throw ContractError("Genome::layer_rows: layer " + std::to_string(layer) + " outside [0, " +
                        std::to_string(layer_count()) + ")");
  }
  int begin = 0;
  for (int l = 0; l < layer; ++l) begin += widths[l];
  return {begin, begin + widths[layer]};
}

Genome init_genome(const std::vector<int>& widths, int genes, Rng& rng) {
  if (genes < 1) throw ContractError("init_genome: gene count must be >= 1");
  if (widths.size() < 2) throw ContractError("init_genome: need at least 2 layers");
  const int total = std::accumulate(widths.begin(), widths.end(), 0);
  int n_max = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) n_max = std::max(n_max, widths[l - 1]);

  Genome g;
  g.widths = widths;
  g.x = Tensor::zeros(total, genes, /*requires_grad=*/true);
  g.o = Tensor::zeros(genes, genes, /*requires_grad=*/true);
  for (int i = 0; i < g.x.size(); ++i) g.x.data()[i] = rng.normal();
  const double o_std = 1.0 / (genes * std::sqrt(static_cast<double>(n_max)));
  for (int i = 0; i < g.o.size(); ++i) g.o.data()[i] = rng.normal(0.0, o_std);
  return g;
}

namespace {

void check_weight_layer(const Genome& genome, int layer) {
  if (layer < 1 || layer >= genome.layer_count()) {
    throw ContractError("effective_weights: layer " + std::to_string(layer) +
                        " outside [1, " + std::to_string(genome.layer_count()) + ")");
  }
}

}  // namespace

Tensor effective_weights(const Genome& genome, int layer) {
  check_weight_layer(genome, layer);
  const auto [post_begin, post_end] = genome.layer_rows(layer);
  const auto [pre_begin, pre_end] = genome.layer_rows(layer - 1);
  const int n_post = post_end - post_begin;
  const int n_pre = pre_end - pre_begin;
  const int genes = genome.gene_count();

  // X^l O, then (X^l O) X^{l-1}^T
  Tensor xo = Tensor::zeros(n_post, genes);
  kernels::matmul_nn(genome.x.data() + static_cast<std::size_t>(post_begin) * genes,
                     genome.o.data(), xo.data(), n_post, genes, genes);
  Tensor w = Tensor::zeros(n_post, n_pre);
  kernels::matmul_nt(xo.data(), genome.x.data() + static_cast<std::size_t>(pre_begin) * genes,
                     w.data(), n_post, genes, n_pre);
  return w;
}

Tensor effective_weights_on_tape(Tape& tape, const Genome& genome, int layer) {
  check_weight_layer(genome, layer);
  const auto [post_begin, post_end] = genome.layer_rows(layer);
  const auto [pre_begin, pre_end] = genome.layer_rows(layer - 1);
  Tensor x_post = tape.slice_rows(genome.x, post_begin, post_end);
  Tensor x_pre = tape.slice_rows(genome.x, pre_begin, pre_end);
  return tape.matmul(tape.matmul(x_post, genome.o), tape.transpose(x_pre));
}

void BinaryGenome::validate() const {
  if (static_cast<int>(x.size()) != neurons * genes ||
      static_cast<int>(o.size()) != genes * genes) {
    throw ContractError("BinaryGenome: inconsistent sizes");
  }
  for (auto b : x) {
    if (b > 1) throw ContractError("BinaryGenome: X entries must be 0 or 1");
  }
  for (double p : o) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("BinaryGenome: O entries must lie in [0, 1]");
  }
}

int connectome_entry_oracle(const BinaryGenome& genome, int u, int v) {
  if (u < 0 || u >= genome.neurons || v < 0 || v >= genome.neurons) {
    throw ContractError("connectome_entry_oracle: neuron index out of range");
  }
  double acc = 0.0;
  for (int i = 0; i < genome.genes; ++i) {
    for (int j = 0; j < genome.genes; ++j) {
      acc += genome.x_at(u, i) * genome.o_at(i, j) * genome.x_at(v, j);
    }
  }
  return acc > 0.0 ? 1 : 0;
}

std::vector<std::uint8_t> binary_connectome(const BinaryGenome& genome) {
  const int n = genome.neurons, g = genome.genes;
  std::vector<double> x_real(genome.x.begin(), genome.x.end());
  std::vector<double> xo(static_cast<std::size_t>(n) * g, 0.0);
  kernels::matmul_nn(x_real.data(), genome.o.data(), xo.data(), n, g, g);
  std::vector<double> prod(static_cast<std::size_t>(n) * n, 0.0);
  kernels::matmul_nt(xo.data(), x_real.data(), prod.data(), n, g, n);
  std::vector<std::uint8_t> b(prod.size());
  for (std::size_t i = 0; i < prod.size(); ++i) b[i] = prod[i] > 0.0 ? 1 : 0;
  return b;
}

std::vector<Motif> extract_motifs(const BinaryGenome& genome) {
  std::vector<Motif> motifs;
  for (int k = 0; k < genome.genes; ++k) {
    for (int l = 0; l < genome.genes; ++l) {
      if (!(genome.o_at(k, l) > 0.0)) continue;
      Motif m;
      m.post_gene = k;
      m.pre_gene = l;
      for (int u = 0; u < genome.neurons; ++u) {
        if (genome.x_at(u, k)) m.post_cluster.push_back(u);
      }
      for (int v = 0; v < genome.neurons; ++v) {
        if (genome.x_at(v, l)) m.pre_cluster.push_back(v);
      }
      if (!m.post_cluster.empty() && !m.pre_cluster.empty()) motifs.push_back(std::move(m));
    }
  }
  return motifs;
}

BinaryGenome binarize(const Genome& genome) {
  BinaryGenome b;
  b.neurons = genome.total_neurons();
  b.genes = genome.gene_count();
  b.x.resize(static_cast<std::size_t>(b.neurons) * b.genes);
  b.o.resize(static_cast<std::size_t>(b.genes) * b.genes);
  for (std::size_t i = 0; i < b.x.size(); ++i) b.x[i] = genome.x.data()[i] > 0.0 ? 1 : 0;
  for (std::size_t i = 0; i < b.o.size(); ++i) {
    b.o[i] = std::clamp(genome.o.data()[i], 0.0, 1.0);
  }
  return b;
}

std::string genome_to_json(const Genome& genome) {
  nlohmann::json j;
  j["format"] = "cmsnn-genome-v1";
  j["widths"] = genome.widths;
  j["genes"] = genome.gene_count();
  j["x"] = std::vector<double>(genome.x.data(), genome.x.data() + genome.x.size());
  j["o"] = std::vector<double>(genome.o.data(), genome.o.data() + genome.o.size());
  j["init_seed"] = genome.init_seed;
  return j.dump(2);
}

Genome genome_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "cmsnn-genome-v1") {
    throw IoError("genome_from_json: unknown format tag");
  }
  Genome g;
  g.widths = j.at("widths").get<std::vector<int>>();
  const int genes = j.at("genes").get<int>();
  const int total = std::accumulate(g.widths.begin(), g.widths.end(), 0);
  const auto xs = j.at("x").get<std::vector<double>>();
  const auto os = j.at("o").get<std::vector<double>>();
  if (static_cast<int>(xs.size()) != total * genes ||
      static_cast<int>(os.size()) != genes * genes) {
    throw IoError("genome_from_json: matrix sizes disagree with widths/genes");
  }
  g.x = Tensor::zeros(total, genes, /*requires_grad=*/true);
  g.o = Tensor::zeros(genes, genes, /*requires_grad=*/true);
  std::copy(xs.begin(), xs.end(), g.x.data());
  std::copy(os.begin(), os.end(), g.o.data());
  g.init_seed = j.value("init_seed", std::uint64_t{0});
  return g;
}

}  // namespace cmsnn
