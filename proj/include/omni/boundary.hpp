#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "omni/common.hpp"
#include "omni/geom.hpp"

namespace omni {

// Per-column 1D layout representation. y_c and y_f are boundary latitudes
// normalized by pi/2 (so y_c in (0, 1], y_f in [-1, 0) for physically valid
// maps); y_w is the corner probability in [0, 1]. The model emits y_w as
// logits internally and converts at this interface.
struct BoundaryMap {
  int width = 0;
  std::vector<double> y_c, y_f, y_w;

  static BoundaryMap zeros(int W) {
    BoundaryMap m;
    m.width = W;
    m.y_c.assign(static_cast<size_t>(W), 0.0);
    m.y_f.assign(static_cast<size_t>(W), 0.0);
    m.y_w.assign(static_cast<size_t>(W), 0.0);
    return m;
  }

  double lat_c(int col) const { return y_c[static_cast<size_t>(col)] * kHalfPi; }
  double lat_f(int col) const { return y_f[static_cast<size_t>(col)] * kHalfPi; }

  bool column_valid(int col) const {
    return y_f[static_cast<size_t>(col)] < 0.0 && y_c[static_cast<size_t>(col)] > 0.0;
  }
};

inline double circular_col_distance(double a, double b, int W) {
  double d = std::abs(a - b);
  d = std::fmod(d, static_cast<double>(W));
  return std::min(d, W - d);
}

// Gaussian-smoothed corner target: exp(-d^2 / (2 sigma^2)) with d the
// circular column distance to the nearest corner. sigma = 1.5 columns at
// W = 128, scaled with width.
inline double corner_sigma(int W) { return 1.5 * W / 128.0; }

inline std::vector<double> smooth_corner_target(const std::vector<double>& corner_cols,
                                                int W) {
  std::vector<double> out(static_cast<size_t>(W), 0.0);
  if (corner_cols.empty()) return out;
  const double sigma = corner_sigma(W);
  for (int c = 0; c < W; ++c) {
    double dmin = static_cast<double>(W);
    for (double cc : corner_cols)
      dmin = std::min(dmin, circular_col_distance(static_cast<double>(c), cc, W));
    out[static_cast<size_t>(c)] = std::exp(-dmin * dmin / (2.0 * sigma * sigma));
  }
  return out;
}

inline nlohmann::json boundary_to_json(const BoundaryMap& m) {
  return {{"width", m.width}, {"y_c", m.y_c}, {"y_f", m.y_f}, {"y_w", m.y_w}};
}

inline BoundaryMap boundary_from_json(const nlohmann::json& j) {
  BoundaryMap m;
  m.width = j.at("width").get<int>();
  m.y_c = j.at("y_c").get<std::vector<double>>();
  m.y_f = j.at("y_f").get<std::vector<double>>();
  m.y_w = j.at("y_w").get<std::vector<double>>();
  check(m.y_c.size() == static_cast<size_t>(m.width) && m.y_f.size() == m.y_c.size() &&
            m.y_w.size() == m.y_c.size(),
        ErrorCode::InvalidConfig, "boundary map arrays do not match width");
  return m;
}

}  // namespace omni
