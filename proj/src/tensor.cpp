#include "cmsnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>
#include <utility>

namespace cmsnn {

namespace {

// Tapes allocate and drop hundreds of identically sized buffers per batch;
// recycling them through a thread-local free list keeps the pages warm
// instead of bouncing every tensor through mmap.
class BufferPool {
 public:
  std::vector<double> acquire(std::size_t n, bool zeroed) {
    auto& bucket = free_[n];
    if (!bucket.empty()) {
      std::vector<double> buf = std::move(bucket.back());
      bucket.pop_back();
      if (zeroed) std::fill(buf.begin(), buf.end(), 0.0);
      return buf;
    }
    return std::vector<double>(n, 0.0);
  }

  void release(std::vector<double>&& buf) {
    if (buf.empty()) return;
    auto& bucket = free_[buf.size()];
    if (bucket.size() < 4096) bucket.push_back(std::move(buf));
  }

 private:
  std::unordered_map<std::size_t, std::vector<std::vector<double>>> free_;
};

thread_local BufferPool t_pool;

std::shared_ptr<TensorData> make_data(int rows, int cols, bool requires_grad, bool zeroed) {
  if (rows <= 0 || cols <= 0) {
    throw ContractError("tensor dimensions must be positive, got " + shape_str(rows, cols));
  }
  auto d = std::make_shared<TensorData>();
  d->rows = rows;
  d->cols = cols;
  d->v = t_pool.acquire(static_cast<std::size_t>(rows) * cols, zeroed);
  d->requires_grad = requires_grad;
  return d;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.rows(), a.cols()) +
                     " vs " + shape_str(b.rows(), b.cols()));
  }
}

}  // namespace

TensorData::~TensorData() {
  t_pool.release(std::move(v));
  t_pool.release(std::move(g));
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  return Tensor(make_data(rows, cols, requires_grad, /*zeroed=*/true));
}

Tensor Tensor::uninit(int rows, int cols) {
  return Tensor(make_data(rows, cols, false, /*zeroed=*/false));
}

Tensor Tensor::full(int rows, int cols, double value, bool requires_grad) {
  Tensor t(make_data(rows, cols, requires_grad, /*zeroed=*/false));
  std::fill(t.d_->v.begin(), t.d_->v.end(), value);
  return t;
}

Tensor Tensor::identity(int n) {
  Tensor t(make_data(n, n, false, /*zeroed=*/true));
  for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows,
                         bool requires_grad) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  Tensor t(make_data(r, c, requires_grad, /*zeroed=*/true));
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) {
      throw ShapeError("from_rows: ragged rows, expected width " + std::to_string(c));
    }
    int j = 0;
    for (double x : row) t.at(i, j++) = x;
    ++i;
  }
  return t;
}

double Tensor::scalar() const {
  if (!is_scalar()) {
    throw ContractError("scalar() on tensor of shape " + shape_str(rows(), cols()));
  }
  return d_->v[0];
}

std::span<double> Tensor::ensure_grad() {
  if (d_->g.empty()) d_->g = t_pool.acquire(d_->v.size(), /*zeroed=*/true);
  return d_->g;
}

Tensor Tensor::clone() const {
  Tensor t(make_data(rows(), cols(), requires_grad(), /*zeroed=*/false));
  std::copy(d_->v.begin(), d_->v.end(), t.d_->v.begin());
  return t;
}

// ---------------------------------------------------------------------------
// kernels

namespace kernels {

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double aip = arow[p];
      if (aip == 0.0) continue;
      const double* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
  // C (m x n) += A (m x k) * B^T with B stored n x k
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  // C (m x n) += A^T * B with A stored k x m, B k x n
  for (int p = 0; p < k; ++p) {
    const double* arow = a + static_cast<std::size_t>(p) * m;
    const double* brow = b + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const double aip = arow[i];
      if (aip == 0.0) continue;
      double* crow = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

double fast_sigmoid_surrogate(double u, double u_thr, double slope) {
  const double d = slope * std::abs(u - u_thr) + 1.0;
  return 1.0 / (d * d);
}

void softmax_columns(const double* logits, double* probs, int k, int b) {
  for (int j = 0; j < b; ++j) {
    double m = logits[j];
    for (int i = 1; i < k; ++i) m = std::max(m, logits[static_cast<std::size_t>(i) * b + j]);
    double z = 0.0;
    for (int i = 0; i < k; ++i) {
      const double e = std::exp(logits[static_cast<std::size_t>(i) * b + j] - m);
      probs[static_cast<std::size_t>(i) * b + j] = e;
      z += e;
    }
    const double inv = 1.0 / z;
    for (int i = 0; i < k; ++i) probs[static_cast<std::size_t>(i) * b + j] *= inv;
  }
}

double softmax_ce_mean(const double* probs, const int* labels, int k, int b) {
  double acc = 0.0;
  for (int j = 0; j < b; ++j) {
    acc += -std::log(probs[static_cast<std::size_t>(labels[j]) * b + j]);
  }
  return acc / b;
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// Tape

bool Tape::any_requires_grad(std::span<const Tensor> ts) {
  return std::any_of(ts.begin(), ts.end(), [](const Tensor& t) { return t.requires_grad(); });
}

void Tape::push(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward) {
  // nodes whose inputs carry no gradient are dead weight on the tape
  if (!any_requires_grad(inputs)) return;
  output.set_requires_grad(true);
  nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward)});
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(a.rows(), a.cols()) +
                     " * " + shape_str(b.rows(), b.cols()));
  }
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros(m, n);
  kernels::matmul_nn(a.data(), b.data(), out.data(), m, k, n);
  push({a, b}, out, [a, b, out, m, k, n]() mutable {
    const double* g = out.grad().data();
    if (a.requires_grad()) {
      kernels::matmul_nt(g, b.data(), a.ensure_grad().data(), m, n, k);  // dA += G B^T
    }
    if (b.requires_grad()) {
      kernels::matmul_tn(a.data(), g, b.ensure_grad().data(), k, m, n);  // dB += A^T G
    }
  });
  return out;
}

Tensor Tape::add(Tensor a, Tensor b) {
  check_same_shape("add", a, b);
  Tensor out = Tensor::uninit(a.rows(), a.cols());
  const int n = a.size();
  for (int i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  push({a, b}, out, [a, b, out, n]() mutable {
    const double* g = out.grad().data();
    if (a.requires_grad()) {
      double* ga = a.ensure_grad().data();
      for (int i = 0; i < n; ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      double* gb = b.ensure_grad().data();
      for (int i = 0; i < n; ++i) gb[i] += g[i];
    }
  });
  return out;
}

Tensor Tape::sub(Tensor a, Tensor b) {
  check_same_shape("sub", a, b);
  Tensor out = Tensor::uninit(a.rows(), a.cols());
  const int n = a.size();
  for (int i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
  push({a, b}, out, [a, b, out, n]() mutable {
    const double* g = out.grad().data();
    if (a.requires_grad()) {
      double* ga = a.ensure_grad().data();
      for (int i = 0; i < n; ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      double* gb = b.ensure_grad().data();
      for (int i = 0; i < n; ++i) gb[i] -= g[i];
    }
  });
  return out;
}

Tensor Tape::mul(Tensor a, Tensor b) {
  check_same_shape("mul", a, b);
  Tensor out = Tensor::uninit(a.rows(), a.cols());
  const int n = a.size();
  for (int i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  push({a, b}, out, [a, b, out, n]() mutable {
    const double* g = out.grad().data();
    if (a.requires_grad()) {
      double* ga = a.ensure_grad().data();
      const double* bv = b.data();
      for (int i = 0; i < n; ++i) ga[i] += g[i] * bv[i];
    }
    if (b.requires_grad()) {
      double* gb = b.ensure_grad().data();
      const double* av = a.data();
      for (int i = 0; i < n; ++i) gb[i] += g[i] * av[i];
    }
  });
  return out;
}

Tensor Tape::scale(Tensor a, double c) {
  Tensor out = Tensor::uninit(a.rows(), a.cols());
  const int n = a.size();
  for (int i = 0; i < n; ++i) out.data()[i] = a.data()[i] * c;
  push({a}, out, [a, out, c, n]() mutable {
    const double* g = out.grad().data();
    if (a.requires_grad()) {
      double* ga = a.ensure_grad().data();
      for (int i = 0; i < n; ++i) ga[i] += g[i] * c;
    }
  });
  return out;
}

Tensor Tape::transpose(Tensor a) {
  const int r = a.rows(), c = a.cols();
  Tensor out = Tensor::uninit(c, r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) out.at(j, i) = a.at(i, j);
  }
  push({a}, out, [a, out, r, c]() mutable {
    if (!a.requires_grad()) return;
    double* ga = a.ensure_grad().data();
    const double* g = out.grad().data();
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) {
        ga[static_cast<std::size_t>(i) * c + j] += g[static_cast<std::size_t>(j) * r + i];
      }
    }
  });
  return out;
}

Tensor Tape::slice_rows(Tensor a, int row_begin, int row_end) {
  if (row_begin < 0 || row_end > a.rows() || row_begin >= row_end) {
    throw ContractError("slice_rows: invalid range [" + std::to_string(row_begin) + ", " +
                        std::to_string(row_end) + ") for " + shape_str(a.rows(), a.cols()));
  }
  const int c = a.cols(), r = row_end - row_begin;
  Tensor out = Tensor::uninit(r, c);
  std::memcpy(out.data(), a.data() + static_cast<std::size_t>(row_begin) * c,
              static_cast<std::size_t>(r) * c * sizeof(double));
  push({a}, out, [a, out, row_begin, r, c]() mutable {
    if (!a.requires_grad()) return;
    double* ga = a.ensure_grad().data();
    const double* g = out.grad().data();
    const std::size_t n = static_cast<std::size_t>(r) * c;
    double* dst = ga + static_cast<std::size_t>(row_begin) * c;
    for (std::size_t i = 0; i < n; ++i) dst[i] += g[i];
  });
  return out;
}

Tensor Tape::sum(Tensor a) {
  Tensor out = Tensor::zeros(1, 1);
  double acc = 0.0;
  const int n = a.size();
  for (int i = 0; i < n; ++i) acc += a.data()[i];
  out.data()[0] = acc;
  push({a}, out, [a, out, n]() mutable {
    if (!a.requires_grad()) return;
    const double g = out.grad()[0];
    double* ga = a.ensure_grad().data();
    for (int i = 0; i < n; ++i) ga[i] += g;
  });
  return out;
}

Tensor Tape::spike_threshold(Tensor u, double u_thr, double surrogate_slope) {
  Tensor out = Tensor::uninit(u.rows(), u.cols());
  const int n = u.size();
  for (int i = 0; i < n; ++i) out.data()[i] = u.data()[i] > u_thr ? 1.0 : 0.0;
  push({u}, out, [u, out, u_thr, surrogate_slope, n]() mutable {
    if (!u.requires_grad()) return;
    double* gu = u.ensure_grad().data();
    const double* g = out.grad().data();
    const double* uv = u.data();
    for (int i = 0; i < n; ++i) {
      gu[i] += g[i] * kernels::fast_sigmoid_surrogate(uv[i], u_thr, surrogate_slope);
    }
  });
  return out;
}

Tensor Tape::softmax_cross_entropy(Tensor logits, std::span<const int> labels) {
  const int k = logits.rows(), b = logits.cols();
  if (static_cast<int>(labels.size()) != b) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(b) + " columns");
  }
  for (int j = 0; j < b; ++j) {
    if (labels[j] < 0 || labels[j] >= k) {
      throw ContractError("softmax_cross_entropy: label " + std::to_string(labels[j]) +
                          " outside [0, " + std::to_string(k) + ")");
    }
  }
  Tensor probs = Tensor::uninit(k, b);
  kernels::softmax_columns(logits.data(), probs.data(), k, b);
  std::vector<int> labels_copy(labels.begin(), labels.end());
  Tensor out = Tensor::zeros(1, 1);
  out.data()[0] = kernels::softmax_ce_mean(probs.data(), labels_copy.data(), k, b);
  push({logits}, out, [logits, out, probs, labels_copy, k, b]() mutable {
    if (!logits.requires_grad()) return;
    const double g = out.grad()[0];
    double* gl = logits.ensure_grad().data();
    const double* p = probs.data();
    const double inv_b = 1.0 / b;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < b; ++j) {
        const double onehot = labels_copy[j] == i ? 1.0 : 0.0;
        gl[static_cast<std::size_t>(i) * b + j] +=
            g * (p[static_cast<std::size_t>(i) * b + j] - onehot) * inv_b;
      }
    }
  });
  return out;
}

Tensor Tape::record_custom(std::vector<Tensor> inputs, Tensor output,
                           std::function<void()> backward) {
  push(std::move(inputs), output, std::move(backward));
  return output;
}

void Tape::backward(const Tensor& root) {
  if (!root.defined() || !root.is_scalar()) {
    throw ContractError("backward: root must be a 1x1 scalar tensor");
  }
  if (!root.requires_grad()) return;  // nothing on the tape leads to it
  {
    Tensor seed = root;
    seed.ensure_grad()[0] = 1.0;
  }
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->output.has_grad()) continue;  // not on any path to the root
    it->backward();
  }
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h) {
  if (!(h > 0.0)) throw ContractError("finite_difference_gradient: step must be positive");
  Tensor grad = Tensor::zeros(x.rows(), x.cols());
  Tensor probe = x.clone();
  for (int i = 0; i < x.size(); ++i) {
    const double x0 = probe.data()[i];
    probe.data()[i] = x0 + h;
    const double f_plus = f(probe);
    probe.data()[i] = x0 - h;
    const double f_minus = f(probe);
    probe.data()[i] = x0;
    grad.data()[i] = (f_plus - f_minus) / (2.0 * h);
  }
  return grad;
}

}  // namespace cmsnn
