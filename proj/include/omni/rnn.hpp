#pragma once

#include <vector>

#include "omni/tensor.hpp"

namespace omni {

// Gate parameters of one GRU direction. W_* act on the concatenation [x; h]
// (or [x; r*h] for the candidate), shapes [K, D+K]; biases [K].
template <typename T>
struct GruParams {
  Tensor<T> Wz, Wr, Wh;
  Tensor<T> bz, br, bh;

  static GruParams zeros(int input_dim, int hidden) {
    GruParams p;
    p.Wz = Tensor<T>::zeros({hidden, input_dim + hidden});
    p.Wr = Tensor<T>::zeros({hidden, input_dim + hidden});
    p.Wh = Tensor<T>::zeros({hidden, input_dim + hidden});
    p.bz = Tensor<T>::zeros({hidden});
    p.br = Tensor<T>::zeros({hidden});
    p.bh = Tensor<T>::zeros({hidden});
    return p;
  }

  int hidden() const { return Wz.dim(0); }
};

// z = sigmoid(Wz [x;h] + bz)
// r = sigmoid(Wr [x;h] + br)
// hc = tanh(Wh [x; r*h] + bh)
// h' = (1-z)*hc + z*h
template <typename T>
Tensor<T> gru_cell(const Tensor<T>& x, const Tensor<T>& h_prev,
                   const GruParams<T>& p) {
  check(x.ndim() == 1 && h_prev.ndim() == 1, ErrorCode::ShapeMismatch,
        "gru_cell: 1-D x and h expected");
  check(p.Wz.dim(1) == x.dim(0) + h_prev.dim(0) && p.Wz.dim(0) == h_prev.dim(0),
        ErrorCode::ShapeMismatch, "gru_cell: parameter shapes do not match x/h");
  Tensor<T> xh = concat(x, h_prev);
  Tensor<T> z = sigmoid(add(matvec(p.Wz, xh), p.bz));
  Tensor<T> r = sigmoid(add(matvec(p.Wr, xh), p.br));
  Tensor<T> xrh = concat(x, mul(r, h_prev));
  Tensor<T> hc = tanh_op(add(matvec(p.Wh, xrh), p.bh));
  Tensor<T> one = Tensor<T>::full({h_prev.dim(0)}, T(1));
  return add(mul(sub(one, z), hc), mul(z, h_prev));
}

// Bi-directional GRU over a [T, D] sequence; h0 = 0 both ways; per-step
// outputs concatenated [forward; backward] into [T, 2K].
template <typename T>
Tensor<T> bi_gru(const Tensor<T>& seq, const GruParams<T>& fwd,
                 const GruParams<T>& bwd) {
  check(seq.ndim() == 2, ErrorCode::ShapeMismatch, "bi_gru: [T, D] sequence expected");
  const int steps = seq.dim(0);
  const int K = fwd.hidden();
  check(bwd.hidden() == K, ErrorCode::ShapeMismatch, "bi_gru: hidden size mismatch");

  std::vector<Tensor<T>> hf(static_cast<size_t>(steps));
  Tensor<T> h = Tensor<T>::zeros({K});
  for (int t = 0; t < steps; ++t) {
    h = gru_cell(row(seq, t), h, fwd);
    hf[static_cast<size_t>(t)] = h;
  }
  std::vector<Tensor<T>> hb(static_cast<size_t>(steps));
  h = Tensor<T>::zeros({K});
  for (int t = steps - 1; t >= 0; --t) {
    h = gru_cell(row(seq, t), h, bwd);
    hb[static_cast<size_t>(t)] = h;
  }
  std::vector<Tensor<T>> outs(static_cast<size_t>(steps));
  for (int t = 0; t < steps; ++t)
    outs[static_cast<size_t>(t)] =
        concat(hf[static_cast<size_t>(t)], hb[static_cast<size_t>(t)]);
  return stack_rows(outs);
}

}  // namespace omni
