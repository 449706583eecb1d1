#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "cmsnn/errors.hpp"

namespace cmsnn {

// Dense row-major matrix of doubles. A Tensor is a shared handle: copies
// alias the same storage, which is what lets a Tape keep the values a
// backward pass needs alive without copying them.
struct TensorData {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;  // rows*cols, row-major
  std::vector<double> g;  // empty until backward touches this tensor
  bool requires_grad = false;

  TensorData() = default;
  TensorData(const TensorData&) = delete;
  TensorData& operator=(const TensorData&) = delete;
  ~TensorData();  // returns the buffers to the thread-local pool
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  // Storage with unspecified contents; the caller must overwrite every entry.
  static Tensor uninit(int rows, int cols);
  static Tensor full(int rows, int cols, double value, bool requires_grad = false);
  static Tensor identity(int n);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows,
                          bool requires_grad = false);

  bool defined() const { return static_cast<bool>(d_); }
  int rows() const { return d_->rows; }
  int cols() const { return d_->cols; }
  int size() const { return d_->rows * d_->cols; }
  bool is_scalar() const { return d_ && d_->rows == 1 && d_->cols == 1; }

  double at(int i, int j) const { return d_->v[static_cast<std::size_t>(i) * d_->cols + j]; }
  double& at(int i, int j) { return d_->v[static_cast<std::size_t>(i) * d_->cols + j]; }
  double scalar() const;

  double* data() { return d_->v.data(); }
  const double* data() const { return d_->v.data(); }
  std::span<const double> values() const { return d_->v; }
  std::span<double> values_mut() { return d_->v; }

  bool requires_grad() const { return d_ && d_->requires_grad; }
  void set_requires_grad(bool flag) { d_->requires_grad = flag; }

  // Gradient is "absent" until a backward pass accumulates into it.
  bool has_grad() const { return d_ && !d_->g.empty(); }
  std::span<const double> grad() const { return d_->g; }
  double grad_at(int i, int j) const { return d_->g[static_cast<std::size_t>(i) * d_->cols + j]; }
  void zero_grad() { d_->g.clear(); }

  // Allocates (zero-filled) grad storage on first use and returns it.
  std::span<double> ensure_grad();

  bool same_storage(const Tensor& other) const { return d_ == other.d_; }
  Tensor clone() const;

 private:
  explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}
  std::shared_ptr<TensorData> d_;
  friend class Tape;
};

// Define-by-run tape. Ops record a node per call; backward() walks the nodes
// in reverse creation order, which visits every node exactly once and keeps
// gradient accumulation deterministic. One tape belongs to one forward/loss
// computation; parameters (persistent tensors) survive the tape.
class Tape {
 public:
  Tensor matmul(Tensor a, Tensor b);
  Tensor add(Tensor a, Tensor b);
  Tensor sub(Tensor a, Tensor b);
  Tensor mul(Tensor a, Tensor b);
  Tensor scale(Tensor a, double c);
  Tensor transpose(Tensor a);
  Tensor slice_rows(Tensor a, int row_begin, int row_end);
  Tensor sum(Tensor a);

  // Heaviside spike with fast-sigmoid surrogate backward
  // dS/du = 1 / (slope * |u - u_thr| + 1)^2.
  Tensor spike_threshold(Tensor u, double u_thr, double surrogate_slope = 25.0);

  // Mean over columns of -log softmax(logits[:, b])[labels[b]].
  Tensor softmax_cross_entropy(Tensor logits, std::span<const int> labels);

  // Extension point for fused ops defined outside this header. `backward`
  // runs with the output gradient already allocated; it is responsible for
  // accumulating into the inputs it cares about.
  Tensor record_custom(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward);

  // Seeds root (a 1x1 tensor) with gradient 1 and propagates through every
  // recorded node. Gradients accumulate additively across shared uses.
  void backward(const Tensor& root);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;

  static bool any_requires_grad(std::span<const Tensor> ts);
  void push(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward);
};

// Central-difference gradient estimate of a scalar function, entry by entry.
// Test oracle: independent of the tape machinery it is used to check.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h = 1e-5);

namespace kernels {
// Raw routines shared by the tape ops and the no-grad inference path so the
// two produce bit-identical numbers. All matrices row-major.
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);  // C += A B
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);  // C += A B^T, B n x k
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);  // C += A^T B, A k x m
double fast_sigmoid_surrogate(double u, double u_thr, double slope);
void softmax_columns(const double* logits, double* probs, int k, int b);
double softmax_ce_mean(const double* probs, const int* labels, int k, int b);
}  // namespace kernels

}  // namespace cmsnn
