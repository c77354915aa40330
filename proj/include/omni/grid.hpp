#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <tuple>
#include <vector>

#include "omni/geom.hpp"
#include "omni/tensor.hpp"

namespace omni {

enum class GridMode { Planar, Equirect, Gnomonic };

inline const char* grid_mode_name(GridMode m) {
  switch (m) {
    case GridMode::Planar: return "planar";
    case GridMode::Equirect: return "equirect";
    case GridMode::Gnomonic: return "gnomonic";
  }
  return "?";
}

inline GridMode grid_mode_from_name(const std::string& s) {
  if (s == "planar") return GridMode::Planar;
  if (s == "equirect") return GridMode::Equirect;
  if (s == "gnomonic") return GridMode::Gnomonic;
  fail(ErrorCode::InvalidConfig, "unknown conv mode: " + s);
}

// One kernel tap for one output row. Tap positions depend only on the output
// row; the horizontal coordinate is stored as an offset du relative to the
// output pixel's input-column center, which makes every grid column-shift
// covariant by construction. Bilinear sources are (r0, c+dc0), (r0, c+dc0+1),
// (r1, c+dc0), (r1, c+dc0+1) with columns wrapped and rows clamped.
struct GridTap {
  double v_src = 0.0;  // continuous source row, clamped to [0, H-1]
  double du = 0.0;     // continuous column offset in pixels
  int r0 = 0, r1 = 0;  // bilinear rows (clamped)
  int dc0 = 0;         // floor(du)
  double w00 = 1, w01 = 0, w10 = 0, w11 = 0;  // sum to 1
};

struct SamplingGrid {
  GridMode mode = GridMode::Planar;
  int kh = 3, kw = 3;
  int H = 0, W = 0;
  int sh = 1, sw = 1;
  int H_out = 0, W_out = 0;
  double dv_rad = 0.0, du_rad = 0.0;  // tap angular spacing
  std::vector<GridTap> taps;          // [H_out][kh*kw]

  int taps_per_pixel() const { return kh * kw; }

  const GridTap& tap(int out_row, int t) const {
    return taps[static_cast<size_t>(out_row) * kh * kw + t];
  }
  const GridTap& tap(int out_row, int ki, int kj) const {
    return tap(out_row, ki * kw + kj);
  }

  // input-image center of output pixel (r, c)
  int center_row(int r) const { return r * sh; }
  int center_col(int c) const { return c * sw; }

  // absolute continuous source coordinates of a tap for output column c
  double u_src(int out_row, int t, int out_col) const {
    return center_col(out_col) + tap(out_row, t).du;
  }
};

namespace detail {

inline GridTap make_tap(double v_src, double du, int H) {
  GridTap t;
  t.du = du;
  t.dc0 = static_cast<int>(std::floor(du));
  const double fu = du - std::floor(du);
  double fv;
  if (v_src <= 0.0) {
    t.v_src = 0.0;
    t.r0 = t.r1 = 0;
    fv = 0.0;
  } else if (v_src >= H - 1) {
    t.v_src = static_cast<double>(H - 1);
    t.r0 = t.r1 = H - 1;
    fv = 0.0;
  } else {
    t.v_src = v_src;
    t.r0 = static_cast<int>(std::floor(v_src));
    t.r1 = t.r0 + 1;
    fv = v_src - t.r0;
  }
  t.w00 = (1.0 - fv) * (1.0 - fu);
  t.w01 = (1.0 - fv) * fu;
  t.w10 = fv * (1.0 - fu);
  t.w11 = fv * fu;
  return t;
}

}  // namespace detail

// Per-row kernel sampling grid for the three projection modes.
//
// Equirect realizes
//   lat = lat0 + i * dv,   lon = lon0 + j * du * sec(lat)
// with (i up, j right) kernel indices centered at 0 and sec taken at the
// offset tap latitude. Gnomonic places taps on the tangent plane at the
// output pixel, (x, y) = (tan(j*du), tan(i*dv)). Planar ignores angular
// spacing and reproduces classic convolution taps at integer offsets.
//
// `angular_step`, when given, replaces the default per-pixel pitch
// (pi/H vertically, 2pi/W horizontally) in both directions.
inline SamplingGrid build_grid(GridMode mode, int kh, int kw, int H, int W,
                               int sh = 1, int sw = 1,
                               std::optional<double> angular_step = std::nullopt) {
  check(kh >= 1 && kw >= 1 && kh % 2 == 1 && kw % 2 == 1, ErrorCode::ShapeMismatch,
        "kernel dims must be odd and positive");
  check(H >= kh && W >= kw, ErrorCode::ShapeMismatch,
        "input smaller than kernel extent");
  check(sh >= 1 && sw >= 1, ErrorCode::ShapeMismatch, "stride must be >= 1");

  SamplingGrid g;
  g.mode = mode;
  g.kh = kh;
  g.kw = kw;
  g.H = H;
  g.W = W;
  g.sh = sh;
  g.sw = sw;
  g.H_out = (H + sh - 1) / sh;
  g.W_out = (W + sw - 1) / sw;
  g.dv_rad = angular_step.value_or(kPi / H);
  g.du_rad = angular_step.value_or(kTwoPi / W);

  if (mode != GridMode::Planar) {
    // vertical extent >= pi/2 would push sec across the pole at mid latitudes;
    // the gnomonic tangent plane additionally diverges at 90 degrees sideways
    check((kh - 1) * g.dv_rad < kHalfPi, ErrorCode::KernelTooLarge,
          "kernel angular extent must stay below pi/2");
    if (mode == GridMode::Gnomonic)
      check((kw - 1) * g.du_rad < kHalfPi, ErrorCode::KernelTooLarge,
            "gnomonic kernel would leave the tangent plane");
  }

  const int ci = (kh - 1) / 2, cj = (kw - 1) / 2;
  const double lat_cap = kHalfPi - kPoleEps;
  g.taps.resize(static_cast<size_t>(g.H_out) * kh * kw);

  for (int r = 0; r < g.H_out; ++r) {
    const int v0 = g.center_row(r);
    const double lat0 = lat_of_row(v0, H);
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const int i_up = ci - ki;   // latitude-positive tap index
        const int j = kj - cj;      // longitude-positive tap index
        GridTap tap;
        switch (mode) {
          case GridMode::Planar:
            tap = detail::make_tap(static_cast<double>(v0 + (ki - ci)),
                                   static_cast<double>(j), H);
            break;
          case GridMode::Equirect: {
            double lat = std::clamp(lat0 + i_up * g.dv_rad, -lat_cap, lat_cap);
#ifdef OMNI_EQ6_CENTER_SEC
            // alternative reading of Eq. 6: sec of the kernel-center latitude
            const double sec_lat = std::clamp(lat0, -lat_cap, lat_cap);
#else
            const double sec_lat = lat;
#endif
            const double dlon = j * g.du_rad / std::cos(sec_lat);
            tap = detail::make_tap(row_of_lat(lat, H), dlon / kTwoPi * W, H);
            break;
          }
          case GridMode::Gnomonic: {
            const LatLon c{std::clamp(lat0, -lat_cap, lat_cap), 0.0};
            const LatLon p = gnomonic_inverse(c, std::tan(j * g.du_rad),
                                              std::tan(i_up * g.dv_rad));
            const double lat = std::clamp(p.lat, -lat_cap, lat_cap);
            tap = detail::make_tap(row_of_lat(lat, H), p.lon / kTwoPi * W, H);
            break;
          }
        }
        g.taps[(static_cast<size_t>(r) * kh + ki) * kw + kj] = tap;
      }
    }
  }
  return g;
}

// Bilinear gather of one tap for every channel. Horizontal wrap means a tap
// at u_src = W - 0.25 blends columns W-1 and 0.
template <typename T>
void sample_into(const T* img, int C, int H, int W, const SamplingGrid& g,
                 int out_row, int out_col, int tap_index, T* out) {
  const GridTap& t = g.tap(out_row, tap_index);
  const int c0 = wrap_col(g.center_col(out_col) + t.dc0, W);
  const int c1 = wrap_col(c0 + 1, W);
  const size_t plane = static_cast<size_t>(H) * W;
  for (int ch = 0; ch < C; ++ch) {
    const T* p = img + ch * plane;
    const T* row0 = p + static_cast<size_t>(t.r0) * W;
    const T* row1 = p + static_cast<size_t>(t.r1) * W;
    out[ch] = static_cast<T>(t.w00) * row0[c0] + static_cast<T>(t.w01) * row0[c1] +
              static_cast<T>(t.w10) * row1[c0] + static_cast<T>(t.w11) * row1[c1];
  }
}

template <typename T>
std::vector<T> sample_values(const Tensor<T>& image, const SamplingGrid& g,
                             int out_row, int out_col, int tap_index) {
  check(image.ndim() == 3 && image.dim(1) == g.H && image.dim(2) == g.W,
        ErrorCode::ShapeMismatch, "sample: image does not match grid dims");
  std::vector<T> out(static_cast<size_t>(image.dim(0)));
  sample_into(image.data(), image.dim(0), g.H, g.W, g, out_row, out_col, tap_index,
              out.data());
  return out;
}

// Discrete cos-weighted sphere cross-correlation restricted to azimuthal
// shifts: out[k] = sum_{r,c} h[r][(c-k) mod W] f[r][c] cos(lat_r) (2pi/W)(pi/H).
template <typename T>
Tensor<T> azimuthal_correlate(const Tensor<T>& f, const Tensor<T>& h) {
  check(f.ndim() == 2 && f.shape() == h.shape(), ErrorCode::ShapeMismatch,
        "azimuthal_correlate: [H,W] tensors of equal shape required");
  const int H = f.dim(0), W = f.dim(1);
  std::vector<T> wrow(static_cast<size_t>(H));
  for (int r = 0; r < H; ++r)
    wrow[static_cast<size_t>(r)] =
        static_cast<T>(std::cos(lat_of_row(r, H)) * (kTwoPi / W) * (kPi / H));
  std::vector<T> out(static_cast<size_t>(W), T(0));
  const T* fp = f.data();
  const T* hp = h.data();
  for (int k = 0; k < W; ++k) {
    T acc = T(0);
    for (int r = 0; r < H; ++r) {
      const T* frow = fp + static_cast<size_t>(r) * W;
      const T* hrow = hp + static_cast<size_t>(r) * W;
      T racc = T(0);
      for (int c = 0; c < W; ++c) racc += hrow[wrap_col(c - k, W)] * frow[c];
      acc += racc * wrow[static_cast<size_t>(r)];
    }
    out[static_cast<size_t>(k)] = acc;
  }
  return Tensor<T>::from_data({W}, std::move(out));
}

// Process-wide grid cache keyed on (mode, kernel, dims, stride, step).
// Concurrent readers share the lock; insertion is serialized.
class GridCache {
 public:
  static GridCache& instance() {
    static GridCache c;
    return c;
  }

  std::shared_ptr<const SamplingGrid> get(GridMode mode, int kh, int kw, int H, int W,
                                          int sh = 1, int sw = 1,
                                          std::optional<double> step = std::nullopt) {
    const Key key{mode, kh, kw, H, W, sh, sw, step.value_or(-1.0)};
    {
      std::shared_lock lk(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    auto grid = std::make_shared<const SamplingGrid>(
        build_grid(mode, kh, kw, H, W, sh, sw, step));
    std::unique_lock lk(mu_);
    auto [it, inserted] = cache_.emplace(key, std::move(grid));
    return it->second;
  }

  size_t size() const {
    std::shared_lock lk(mu_);
    return cache_.size();
  }

 private:
  using Key = std::tuple<GridMode, int, int, int, int, int, int, double>;
  mutable std::shared_mutex mu_;
  std::map<Key, std::shared_ptr<const SamplingGrid>> cache_;
};

}  // namespace omni
