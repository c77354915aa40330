#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "omni/common.hpp"

namespace omni {

// Dense n-d array participating in reverse-mode differentiation. Execution is
// eager; every op records its parents and a backward closure on a tape held
// by shared ownership. A tape is confined to one thread. Tensors that are part
// of a live tape are never mutated in place; the optimizer touches parameter
// data only between tapes.
template <typename T>
class Tensor {
 public:
  struct Node {
    std::vector<int> shape;
    std::vector<T> data;
    std::vector<T> grad;  // same length as data when requires_grad
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;
  };

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
      check(d > 0, ErrorCode::ShapeMismatch, "dims must be positive");
      n *= d;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    n->data.assign(static_cast<size_t>(shape_numel(shape)), T(0));
    n->shape = std::move(shape);
    Tensor t(n);
    if (requires_grad) t.set_requires_grad(true);
    return t;
  }

  static Tensor full(std::vector<int> shape, T v) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.data(), t.data() + t.numel(), v);
    return t;
  }

  static Tensor scalar(T v) { return full({1}, v); }

  static Tensor from_data(std::vector<int> shape, std::vector<T> data,
                          bool requires_grad = false) {
    check(shape_numel(shape) == static_cast<int64_t>(data.size()),
          ErrorCode::ShapeMismatch, "data length does not match shape");
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    Tensor t(n);
    if (requires_grad) t.set_requires_grad(true);
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape.at(static_cast<size_t>(i)); }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int64_t numel() const { return static_cast<int64_t>(node_->data.size()); }

  T* data() { return node_->data.data(); }
  const T* data() const { return node_->data.data(); }
  std::vector<T>& vec() { return node_->data; }
  const std::vector<T>& vec() const { return node_->data; }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool rg) {
    node_->requires_grad = rg;
    if (rg && node_->grad.size() != node_->data.size())
      node_->grad.assign(node_->data.size(), T(0));
    if (!rg) node_->grad.clear();
    return *this;
  }

  T* grad() { return node_->grad.data(); }
  const T* grad() const { return node_->grad.data(); }
  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), T(0)); }

  T item() const {
    check(numel() == 1, ErrorCode::ShapeMismatch, "item() needs a scalar tensor");
    return node_->data[0];
  }

  Tensor clone() const {
    auto n = std::make_shared<Node>();
    n->shape = node_->shape;
    n->data = node_->data;
    return Tensor(n);
  }

  // Gradient accumulation is additive; run once per recorded tape.
  void backward() {
    check(numel() == 1, ErrorCode::ShapeMismatch, "backward() needs a scalar root");
    check(node_->requires_grad, ErrorCode::ShapeMismatch,
          "backward() on a tensor with no grad path");
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    topo(node_.get(), seen, order);
    node_->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      if (n->backward_fn) n->backward_fn(*n);
    }
  }

  std::shared_ptr<Node> node_;

 private:
  static void topo(Node* n, std::unordered_set<Node*>& seen, std::vector<Node*>& order) {
    if (!n->requires_grad || seen.count(n)) return;
    seen.insert(n);
    for (auto& p : n->parents) topo(p.get(), seen, order);
    order.push_back(n);
  }
};

using TensorD = Tensor<double>;
using TensorF = Tensor<float>;

namespace detail {

template <typename T>
Tensor<T> make_op(std::vector<int> shape, std::vector<T> data,
                  std::vector<Tensor<T>> parents,
                  std::function<void(typename Tensor<T>::Node&)> bw) {
  bool rg = false;
  for (const auto& p : parents) rg = rg || p.requires_grad();
  Tensor<T> out = Tensor<T>::from_data(std::move(shape), std::move(data));
  if (rg) {
    out.set_requires_grad(true);
    auto& n = *out.node_;
    n.parents.reserve(parents.size());
    for (auto& p : parents) n.parents.push_back(p.node_);
    n.backward_fn = std::move(bw);
  }
  return out;
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  check(a.shape() == b.shape(), ErrorCode::ShapeMismatch,
        std::string(what) + ": shape mismatch");
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<T> out(a.vec());
  const T* pb = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += pb[i];
  return detail::make_op<T>(
      a.shape(), std::move(out), {a, b}, [](typename Tensor<T>::Node& n) {
        for (int s = 0; s < 2; ++s) {
          auto& p = *n.parents[s];
          if (!p.requires_grad) continue;
          for (size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
        }
      });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<T> out(a.vec());
  const T* pb = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= pb[i];
  return detail::make_op<T>(
      a.shape(), std::move(out), {a, b}, [](typename Tensor<T>::Node& n) {
        auto& pa = *n.parents[0];
        auto& pb2 = *n.parents[1];
        if (pa.requires_grad)
          for (size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i];
        if (pb2.requires_grad)
          for (size_t i = 0; i < n.grad.size(); ++i) pb2.grad[i] -= n.grad[i];
      });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<T> out(a.vec());
  const T* pb = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= pb[i];
  return detail::make_op<T>(
      a.shape(), std::move(out), {a, b}, [](typename Tensor<T>::Node& n) {
        auto& pa = *n.parents[0];
        auto& pb2 = *n.parents[1];
        if (pa.requires_grad)
          for (size_t i = 0; i < n.grad.size(); ++i)
            pa.grad[i] += n.grad[i] * pb2.data[i];
        if (pb2.requires_grad)
          for (size_t i = 0; i < n.grad.size(); ++i)
            pb2.grad[i] += n.grad[i] * pa.data[i];
      });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  std::vector<T> out(a.vec());
  for (auto& v : out) v *= s;
  return detail::make_op<T>(a.shape(), std::move(out), {a},
                            [s](typename Tensor<T>::Node& n) {
                              auto& p = *n.parents[0];
                              if (!p.requires_grad) return;
                              for (size_t i = 0; i < n.grad.size(); ++i)
                                p.grad[i] += n.grad[i] * s;
                            });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  std::vector<T> out(a.vec());
  for (auto& v : out) v += s;
  return detail::make_op<T>(a.shape(), std::move(out), {a},
                            [](typename Tensor<T>::Node& n) {
                              auto& p = *n.parents[0];
                              if (!p.requires_grad) return;
                              for (size_t i = 0; i < n.grad.size(); ++i)
                                p.grad[i] += n.grad[i];
                            });
}

// ReLU; subgradient at 0 is 0.
template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> out(a.vec());
  for (auto& v : out) v = v > T(0) ? v : T(0);
  return detail::make_op<T>(a.shape(), std::move(out), {a},
                            [](typename Tensor<T>::Node& n) {
                              auto& p = *n.parents[0];
                              if (!p.requires_grad) return;
                              for (size_t i = 0; i < n.grad.size(); ++i)
                                if (p.data[i] > T(0)) p.grad[i] += n.grad[i];
                            });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  std::vector<T> out(a.vec());
  for (auto& v : out) v = T(1) / (T(1) + std::exp(-v));
  return detail::make_op<T>(a.shape(), std::move(out), {a},
                            [](typename Tensor<T>::Node& n) {
                              auto& p = *n.parents[0];
                              if (!p.requires_grad) return;
                              for (size_t i = 0; i < n.grad.size(); ++i) {
                                const T y = n.data[i];
                                p.grad[i] += n.grad[i] * y * (T(1) - y);
                              }
                            });
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& a) {
  std::vector<T> out(a.vec());
  for (auto& v : out) v = std::tanh(v);
  return detail::make_op<T>(a.shape(), std::move(out), {a},
                            [](typename Tensor<T>::Node& n) {
                              auto& p = *n.parents[0];
                              if (!p.requires_grad) return;
                              for (size_t i = 0; i < n.grad.size(); ++i) {
                                const T y = n.data[i];
                                p.grad[i] += n.grad[i] * (T(1) - y * y);
                              }
                            });
}

// y = W x, W: [M, N], x: [N]
template <typename T>
Tensor<T> matvec(const Tensor<T>& W, const Tensor<T>& x) {
  check(W.ndim() == 2 && x.ndim() == 1 && W.dim(1) == x.dim(0),
        ErrorCode::ShapeMismatch, "matvec: W [M,N] and x [N] required");
  const int M = W.dim(0), N = W.dim(1);
  std::vector<T> out(static_cast<size_t>(M), T(0));
  const T* w = W.data();
  const T* xv = x.data();
  for (int m = 0; m < M; ++m) {
    const T* row = w + static_cast<size_t>(m) * N;
    T acc = T(0);
    for (int k = 0; k < N; ++k) acc += row[k] * xv[k];
    out[static_cast<size_t>(m)] = acc;
  }
  return detail::make_op<T>(
      {M}, std::move(out), {W, x}, [M, N](typename Tensor<T>::Node& n) {
        auto& pw = *n.parents[0];
        auto& px = *n.parents[1];
        if (pw.requires_grad) {
          for (int m = 0; m < M; ++m) {
            const T g = n.grad[static_cast<size_t>(m)];
            if (g == T(0)) continue;
            T* wrow = pw.grad.data() + static_cast<size_t>(m) * N;
            const T* xv = px.data.data();
            for (int k = 0; k < N; ++k) wrow[k] += g * xv[k];
          }
        }
        if (px.requires_grad) {
          for (int m = 0; m < M; ++m) {
            const T g = n.grad[static_cast<size_t>(m)];
            if (g == T(0)) continue;
            const T* wrow = pw.data.data() + static_cast<size_t>(m) * N;
            for (int k = 0; k < N; ++k) px.grad[k] += g * wrow[k];
          }
        }
      });
}

// 1-D concatenation
template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b) {
  check(a.ndim() == 1 && b.ndim() == 1, ErrorCode::ShapeMismatch,
        "concat: 1-D tensors required");
  std::vector<T> out;
  out.reserve(a.vec().size() + b.vec().size());
  out.insert(out.end(), a.vec().begin(), a.vec().end());
  out.insert(out.end(), b.vec().begin(), b.vec().end());
  const size_t na = a.vec().size();
  const int total = static_cast<int>(out.size());
  return detail::make_op<T>(
      {total}, std::move(out), {a, b},
      [na](typename Tensor<T>::Node& n) {
        auto& pa = *n.parents[0];
        auto& pb = *n.parents[1];
        if (pa.requires_grad)
          for (size_t i = 0; i < na; ++i) pa.grad[i] += n.grad[i];
        if (pb.requires_grad)
          for (size_t i = na; i < n.grad.size(); ++i) pb.grad[i - na] += n.grad[i];
      });
}

template <typename T>
Tensor<T> slice1d(const Tensor<T>& a, int offset, int len) {
  check(a.ndim() == 1 && offset >= 0 && len > 0 && offset + len <= a.dim(0),
        ErrorCode::ShapeMismatch, "slice1d: range out of bounds");
  std::vector<T> out(a.data() + offset, a.data() + offset + len);
  return detail::make_op<T>({len}, std::move(out), {a},
                            [offset](typename Tensor<T>::Node& n) {
                              auto& p = *n.parents[0];
                              if (!p.requires_grad) return;
                              for (size_t i = 0; i < n.grad.size(); ++i)
                                p.grad[static_cast<size_t>(offset) + i] += n.grad[i];
                            });
}

// Row r of a [R, C] tensor as a [C] vector.
template <typename T>
Tensor<T> row(const Tensor<T>& a, int r) {
  check(a.ndim() == 2 && r >= 0 && r < a.dim(0), ErrorCode::ShapeMismatch,
        "row: index out of range");
  const int C = a.dim(1);
  std::vector<T> out(a.data() + static_cast<size_t>(r) * C,
                     a.data() + static_cast<size_t>(r + 1) * C);
  return detail::make_op<T>({C}, std::move(out), {a},
                            [r, C](typename Tensor<T>::Node& n) {
                              auto& p = *n.parents[0];
                              if (!p.requires_grad) return;
                              T* dst = p.grad.data() + static_cast<size_t>(r) * C;
                              for (int i = 0; i < C; ++i) dst[i] += n.grad[static_cast<size_t>(i)];
                            });
}

// Stack K same-length vectors into a [K, C] tensor.
template <typename T>
Tensor<T> stack_rows(const std::vector<Tensor<T>>& rows) {
  check(!rows.empty(), ErrorCode::ShapeMismatch, "stack_rows: empty input");
  const int C = rows.front().dim(0);
  std::vector<T> out;
  out.reserve(rows.size() * static_cast<size_t>(C));
  for (const auto& r : rows) {
    check(r.ndim() == 1 && r.dim(0) == C, ErrorCode::ShapeMismatch,
          "stack_rows: inconsistent lengths");
    out.insert(out.end(), r.vec().begin(), r.vec().end());
  }
  return detail::make_op<T>(
      {static_cast<int>(rows.size()), C}, std::move(out), rows,
      [C](typename Tensor<T>::Node& n) {
        for (size_t k = 0; k < n.parents.size(); ++k) {
          auto& p = *n.parents[k];
          if (!p.requires_grad) continue;
          const T* g = n.grad.data() + k * static_cast<size_t>(C);
          for (int i = 0; i < C; ++i) p.grad[static_cast<size_t>(i)] += g[i];
        }
      });
}

// Concatenate [C_i, W] blocks along the channel axis.
template <typename T>
Tensor<T> concat_rows2d(const std::vector<Tensor<T>>& blocks) {
  check(!blocks.empty(), ErrorCode::ShapeMismatch, "concat_rows2d: empty input");
  const int W = blocks.front().dim(1);
  int Ctot = 0;
  for (const auto& b : blocks) {
    check(b.ndim() == 2 && b.dim(1) == W, ErrorCode::ShapeMismatch,
          "concat_rows2d: width mismatch");
    Ctot += b.dim(0);
  }
  std::vector<T> out;
  out.reserve(static_cast<size_t>(Ctot) * W);
  for (const auto& b : blocks) out.insert(out.end(), b.vec().begin(), b.vec().end());
  return detail::make_op<T>(
      {Ctot, W}, std::move(out), blocks, [](typename Tensor<T>::Node& n) {
        size_t off = 0;
        for (auto& pp : n.parents) {
          auto& p = *pp;
          if (p.requires_grad)
            for (size_t i = 0; i < p.data.size(); ++i) p.grad[i] += n.grad[off + i];
          off += p.data.size();
        }
      });
}

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& a) {
  check(a.ndim() == 2, ErrorCode::ShapeMismatch, "transpose2d: 2-D required");
  const int R = a.dim(0), C = a.dim(1);
  std::vector<T> out(static_cast<size_t>(R) * C);
  const T* src = a.data();
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c)
      out[static_cast<size_t>(c) * R + r] = src[static_cast<size_t>(r) * C + c];
  return detail::make_op<T>(
      {C, R}, std::move(out), {a}, [R, C](typename Tensor<T>::Node& n) {
        auto& p = *n.parents[0];
        if (!p.requires_grad) return;
        for (int r = 0; r < R; ++r)
          for (int c = 0; c < C; ++c)
            p.grad[static_cast<size_t>(r) * C + c] +=
                n.grad[static_cast<size_t>(c) * R + r];
      });
}

// [C, H, W] -> [H*C, W] with the height index major: out[h*C + c] = in[c][h].
template <typename T>
Tensor<T> fold_height_major(const Tensor<T>& a) {
  check(a.ndim() == 3, ErrorCode::ShapeMismatch, "fold_height_major: 3-D required");
  const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
  std::vector<T> out(static_cast<size_t>(C) * H * W);
  const T* src = a.data();
  for (int c = 0; c < C; ++c)
    for (int h = 0; h < H; ++h) {
      const T* s = src + (static_cast<size_t>(c) * H + h) * W;
      T* d = out.data() + (static_cast<size_t>(h) * C + c) * W;
      std::copy(s, s + W, d);
    }
  return detail::make_op<T>(
      {H * C, W}, std::move(out), {a}, [C, H, W](typename Tensor<T>::Node& n) {
        auto& p = *n.parents[0];
        if (!p.requires_grad) return;
        for (int c = 0; c < C; ++c)
          for (int h = 0; h < H; ++h) {
            const T* g = n.grad.data() + (static_cast<size_t>(h) * C + c) * W;
            T* d = p.grad.data() + (static_cast<size_t>(c) * H + h) * W;
            for (int w = 0; w < W; ++w) d[w] += g[w];
          }
      });
}

// Adaptive average pooling along the width of a [C, W] tensor to K columns.
// Bin k covers input columns [floor(k*W/K), ceil((k+1)*W/K)); for K > W this
// degenerates to nearest-neighbor repetition.
template <typename T>
Tensor<T> adaptive_width_pool(const Tensor<T>& a, int K) {
  check(a.ndim() == 2 && K > 0, ErrorCode::ShapeMismatch, "adaptive_width_pool");
  const int C = a.dim(0), W = a.dim(1);
  std::vector<int> lo(static_cast<size_t>(K)), hi(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) {
    lo[static_cast<size_t>(k)] = static_cast<int>((static_cast<int64_t>(k) * W) / K);
    hi[static_cast<size_t>(k)] =
        static_cast<int>((static_cast<int64_t>(k + 1) * W + K - 1) / K);
  }
  std::vector<T> out(static_cast<size_t>(C) * K);
  const T* src = a.data();
  for (int c = 0; c < C; ++c)
    for (int k = 0; k < K; ++k) {
      T acc = T(0);
      for (int w = lo[static_cast<size_t>(k)]; w < hi[static_cast<size_t>(k)]; ++w)
        acc += src[static_cast<size_t>(c) * W + w];
      out[static_cast<size_t>(c) * K + k] =
          acc / static_cast<T>(hi[static_cast<size_t>(k)] - lo[static_cast<size_t>(k)]);
    }
  return detail::make_op<T>(
      {C, K}, std::move(out), {a},
      [C, W, K, lo, hi](typename Tensor<T>::Node& n) {
        auto& p = *n.parents[0];
        if (!p.requires_grad) return;
        for (int c = 0; c < C; ++c)
          for (int k = 0; k < K; ++k) {
            const T g = n.grad[static_cast<size_t>(c) * K + k] /
                        static_cast<T>(hi[static_cast<size_t>(k)] - lo[static_cast<size_t>(k)]);
            for (int w = lo[static_cast<size_t>(k)]; w < hi[static_cast<size_t>(k)]; ++w)
              p.grad[static_cast<size_t>(c) * W + w] += g;
          }
      });
}

}  // namespace omni
