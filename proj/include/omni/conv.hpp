#pragma once

#include <memory>
#include <vector>

#include "omni/grid.hpp"
#include "omni/tensor.hpp"

namespace omni {

// Differentiable single-tap sample: bilinear blend of the four stored source
// pixels for every channel. Backward scatters the incoming gradient to those
// pixels with the same weights, so the scattered mass per tap sums to the
// incoming gradient.
template <typename T>
Tensor<T> sample(const Tensor<T>& image, std::shared_ptr<const SamplingGrid> grid,
                 int out_row, int out_col, int tap_index) {
  check(image.ndim() == 3 && image.dim(1) == grid->H && image.dim(2) == grid->W,
        ErrorCode::ShapeMismatch, "sample: image does not match grid dims");
  const int C = image.dim(0);
  std::vector<T> out(static_cast<size_t>(C));
  sample_into(image.data(), C, grid->H, grid->W, *grid, out_row, out_col, tap_index,
              out.data());
  return detail::make_op<T>(
      {C}, std::move(out), {image},
      [grid, out_row, out_col, tap_index, C](typename Tensor<T>::Node& n) {
        auto& p = *n.parents[0];
        if (!p.requires_grad) return;
        const GridTap& t = grid->tap(out_row, tap_index);
        const int W = grid->W;
        const int c0 = wrap_col(grid->center_col(out_col) + t.dc0, W);
        const int c1 = wrap_col(c0 + 1, W);
        const size_t plane = static_cast<size_t>(grid->H) * W;
        for (int ch = 0; ch < C; ++ch) {
          const T g = n.grad[static_cast<size_t>(ch)];
          T* gp = p.grad.data() + ch * plane;
          gp[static_cast<size_t>(t.r0) * W + c0] += static_cast<T>(t.w00) * g;
          gp[static_cast<size_t>(t.r0) * W + c1] += static_cast<T>(t.w01) * g;
          gp[static_cast<size_t>(t.r1) * W + c0] += static_cast<T>(t.w10) * g;
          gp[static_cast<size_t>(t.r1) * W + c1] += static_cast<T>(t.w11) * g;
        }
      });
}

namespace detail {

// Gather the bilinear patch matrix for one output row:
// P[(ci*K + t) * W_out + c] = sampled value of tap t, channel ci, output col c.
template <typename T>
void gather_patch_row(const T* in, int C_in, const SamplingGrid& g, int r, T* P,
                      int* cbuf) {
  const int K = g.taps_per_pixel();
  const int W = g.W, Wout = g.W_out;
  const size_t plane = static_cast<size_t>(g.H) * W;
  for (int t = 0; t < K; ++t) {
    const GridTap& tap = g.tap(r, t);
    for (int c = 0; c < Wout; ++c) {
      const int c0 = wrap_col(c * g.sw + tap.dc0, W);
      cbuf[2 * c] = c0;
      cbuf[2 * c + 1] = wrap_col(c0 + 1, W);
    }
    for (int ci = 0; ci < C_in; ++ci) {
      const T* row0 = in + ci * plane + static_cast<size_t>(tap.r0) * W;
      const T* row1 = in + ci * plane + static_cast<size_t>(tap.r1) * W;
      T* dst = P + (static_cast<size_t>(ci) * K + t) * Wout;
      for (int c = 0; c < Wout; ++c) {
        const int c0 = cbuf[2 * c], c1 = cbuf[2 * c + 1];
        dst[c] = static_cast<T>(tap.w00) * row0[c0] + static_cast<T>(tap.w01) * row0[c1] +
                 static_cast<T>(tap.w10) * row1[c0] + static_cast<T>(tap.w11) * row1[c1];
      }
    }
  }
}

}  // namespace detail

// Grid-sampled cross-correlation: with a Planar grid this is the classic
// direct convolution; Equirect/Gnomonic grids move only the tap locations,
// so parameter shape and count are identical across modes.
//
// out[o, r, c] = bias[o] + sum_{ci,t} weights[o, ci, t] * sample(in, r, c, t)
//
// Backward distributes through the weights and through the four bilinear
// source pixels of every tap.
template <typename T>
Tensor<T> grid_conv(const Tensor<T>& input, const Tensor<T>& weights,
                    const Tensor<T>& bias, std::shared_ptr<const SamplingGrid> grid) {
  const SamplingGrid& g = *grid;
  check(input.ndim() == 3 && input.dim(1) == g.H && input.dim(2) == g.W,
        ErrorCode::ShapeMismatch, "grid_conv: input does not match grid dims");
  check(weights.ndim() == 4 && weights.dim(1) == input.dim(0) &&
            weights.dim(2) == g.kh && weights.dim(3) == g.kw,
        ErrorCode::ShapeMismatch, "grid_conv: weights [Cout,Cin,kh,kw] required");
  check(bias.ndim() == 1 && bias.dim(0) == weights.dim(0), ErrorCode::ShapeMismatch,
        "grid_conv: bias [Cout] required");

  const int Cin = input.dim(0), Cout = weights.dim(0);
  const int K = g.taps_per_pixel();
  const int Wout = g.W_out, Hout = g.H_out;
  const int patch = Cin * K;

  std::vector<T> out(static_cast<size_t>(Cout) * Hout * Wout);
  std::vector<T> P(static_cast<size_t>(patch) * Wout);
  std::vector<int> cbuf(static_cast<size_t>(2 * Wout));

  const T* wmat = weights.data();
  const T* bvec = bias.data();
  for (int r = 0; r < Hout; ++r) {
    detail::gather_patch_row(input.data(), Cin, g, r, P.data(), cbuf.data());
    for (int o = 0; o < Cout; ++o) {
      T* orow = out.data() + (static_cast<size_t>(o) * Hout + r) * Wout;
      for (int c = 0; c < Wout; ++c) orow[c] = bvec[o];
      const T* wrow = wmat + static_cast<size_t>(o) * patch;
      for (int idx = 0; idx < patch; ++idx) {
        const T w = wrow[idx];
        const T* prow = P.data() + static_cast<size_t>(idx) * Wout;
        for (int c = 0; c < Wout; ++c) orow[c] += w * prow[c];
      }
    }
  }

  return detail::make_op<T>(
      {Cout, Hout, Wout}, std::move(out), {input, weights, bias},
      [grid, Cin, Cout, K, patch](typename Tensor<T>::Node& n) {
        const SamplingGrid& g = *grid;
        const int Wout = g.W_out, Hout = g.H_out, W = g.W;
        auto& pin = *n.parents[0];
        auto& pw = *n.parents[1];
        auto& pb = *n.parents[2];
        std::vector<T> P(static_cast<size_t>(patch) * Wout);
        std::vector<T> dP(static_cast<size_t>(patch) * Wout);
        std::vector<int> cbuf(static_cast<size_t>(2 * Wout));
        const T* wmat = pw.data.data();
        for (int r = 0; r < Hout; ++r) {
          if (pw.requires_grad)
            detail::gather_patch_row(pin.data.data(), Cin, g, r, P.data(), cbuf.data());
          if (pb.requires_grad) {
            for (int o = 0; o < Cout; ++o) {
              const T* grow = n.grad.data() + (static_cast<size_t>(o) * Hout + r) * Wout;
              T acc = T(0);
              for (int c = 0; c < Wout; ++c) acc += grow[c];
              pb.grad[static_cast<size_t>(o)] += acc;
            }
          }
          if (pw.requires_grad) {
            for (int o = 0; o < Cout; ++o) {
              const T* grow = n.grad.data() + (static_cast<size_t>(o) * Hout + r) * Wout;
              T* dwrow = pw.grad.data() + static_cast<size_t>(o) * patch;
              for (int idx = 0; idx < patch; ++idx) {
                const T* prow = P.data() + static_cast<size_t>(idx) * Wout;
                T acc = T(0);
                for (int c = 0; c < Wout; ++c) acc += grow[c] * prow[c];
                dwrow[idx] += acc;
              }
            }
          }
          if (pin.requires_grad) {
            std::fill(dP.begin(), dP.end(), T(0));
            for (int o = 0; o < Cout; ++o) {
              const T* grow = n.grad.data() + (static_cast<size_t>(o) * Hout + r) * Wout;
              const T* wrow = wmat + static_cast<size_t>(o) * patch;
              for (int idx = 0; idx < patch; ++idx) {
                const T w = wrow[idx];
                T* drow = dP.data() + static_cast<size_t>(idx) * Wout;
                for (int c = 0; c < Wout; ++c) drow[c] += w * grow[c];
              }
            }
            const size_t plane = static_cast<size_t>(g.H) * W;
            for (int t = 0; t < g.taps_per_pixel(); ++t) {
              const GridTap& tap = g.tap(r, t);
              for (int c = 0; c < Wout; ++c) {
                const int c0 = wrap_col(c * g.sw + tap.dc0, W);
                cbuf[2 * c] = c0;
                cbuf[2 * c + 1] = wrap_col(c0 + 1, W);
              }
              for (int ci = 0; ci < Cin; ++ci) {
                const T* drow = dP.data() + (static_cast<size_t>(ci) * K + t) * Wout;
                T* g0 = pin.grad.data() + ci * plane + static_cast<size_t>(tap.r0) * W;
                T* g1 = pin.grad.data() + ci * plane + static_cast<size_t>(tap.r1) * W;
                for (int c = 0; c < Wout; ++c) {
                  const T gv = drow[c];
                  const int c0 = cbuf[2 * c], c1 = cbuf[2 * c + 1];
                  g0[c0] += static_cast<T>(tap.w00) * gv;
                  g0[c1] += static_cast<T>(tap.w01) * gv;
                  g1[c0] += static_cast<T>(tap.w10) * gv;
                  g1[c1] += static_cast<T>(tap.w11) * gv;
                }
              }
            }
          }
        }
      });
}

// Convenience overload for callers holding a plain grid.
template <typename T>
Tensor<T> grid_conv(const Tensor<T>& input, const Tensor<T>& weights,
                    const Tensor<T>& bias, const SamplingGrid& grid) {
  return grid_conv(input, weights, bias, std::make_shared<const SamplingGrid>(grid));
}

}  // namespace omni
