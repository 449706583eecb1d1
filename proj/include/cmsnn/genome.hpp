#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cmsnn/rng.hpp"
#include "cmsnn/tensor.hpp"

namespace cmsnn {

// Connectome-model parameterization of a layered network. One global
// gene-expression matrix X (N x G, one row per neuron across all layers,
// partitioned into per-layer row blocks) and one rule matrix O (G x G)
// shared by every layer. The weight matrix of layer l is never stored; it
// is the product X^l O X^{l-1}^T.
struct Genome {
  std::vector<int> widths;  // n_0 .. n_{H-1}
  Tensor x;                 // N x G, learnable
  Tensor o;                 // G x G, learnable
  std::uint64_t init_seed = 0;

  bool defined() const { return x.defined(); }
  int gene_count() const { return o.rows(); }
  int total_neurons() const { return x.rows(); }
  int layer_count() const { return static_cast<int>(widths.size()); }
  // Row range [begin, end) of layer l inside x.
  std::pair<int, int> layer_rows(int layer) const;
};

// X entries are standard normal; O entries have variance 1/(G^2 * n_max)
// with n_max the largest fan-in, which puts the variance of each effective
// weight at roughly 1/n_max (standard fan-in scaling).
Genome init_genome(const std::vector<int>& widths, int genes, Rng& rng);

// Effective weight matrix of layer l (1 <= l <= H-1), numeric.
Tensor effective_weights(const Genome& genome, int layer);

// Same product recorded on a tape; gradients reach both X blocks and O.
Tensor effective_weights_on_tape(Tape& tape, const Genome& genome, int layer);

// Binary connectome model: X in {0,1}^{N x G}, O in [0,1]^{G x G}.
struct BinaryGenome {
  int neurons = 0;
  int genes = 0;
  std::vector<std::uint8_t> x;  // neurons x genes, row-major
  std::vector<double> o;        // genes x genes, row-major

  std::uint8_t x_at(int u, int i) const { return x[static_cast<std::size_t>(u) * genes + i]; }
  double o_at(int i, int j) const { return o[static_cast<std::size_t>(i) * genes + j]; }
  void validate() const;
};

// Entry-wise double sum over all gene pairs followed by a strict-positive
// Heaviside; the reference semantics that binary_connectome must reproduce.
int connectome_entry_oracle(const BinaryGenome& genome, int u, int v);

// B = H(X O X^T) computed with matrix products. H(z) = 1 iff z > 0.
std::vector<std::uint8_t> binary_connectome(const BinaryGenome& genome);

// Complete bipartite motif induced by one positive rule entry O_kl: every
// neuron expressing gene l connects to every neuron expressing gene k.
struct Motif {
  int post_gene = 0;              // k
  int pre_gene = 0;               // l
  std::vector<int> post_cluster;  // {u : X_uk = 1}
  std::vector<int> pre_cluster;   // {v : X_vl = 1}
};

// One motif per rule entry O_kl > 0 with both clusters non-empty. The union
// of all motifs' edge sets equals the support of the binary connectome.
std::vector<Motif> extract_motifs(const BinaryGenome& genome);

// Threshold-at-zero binarization of a trained genome, for motif analysis:
// X entries become X > 0, O entries are clamped into [0, 1].
BinaryGenome binarize(const Genome& genome);

// JSON checkpoint round-trip: layer widths, gene count, row-major X and O,
// and the seed the genome was initialized from.
std::string genome_to_json(const Genome& genome);
Genome genome_from_json(const std::string& text);

}  // namespace cmsnn
