#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "omni/boundary.hpp"
#include "omni/geom.hpp"
#include "omni/layout.hpp"

namespace omni {

struct PeakSet {
  std::vector<int> columns;        // ascending
  std::vector<double> strengths;   // y_w at each peak
};

// Corner peaks: a column is a peak iff its probability is >= min_strength
// and it is the maximum over the circular window spanning the given field of
// view (window width = smallest odd integer >= W * fov/360). Ties go to the
// lower column index.
inline PeakSet find_peaks(const std::vector<double>& y_w, int W,
                          double min_strength = 0.05, double fov_deg = 5.0) {
  check(static_cast<int>(y_w.size()) == W, ErrorCode::ShapeMismatch,
        "find_peaks: column count mismatch");
  int win = static_cast<int>(std::ceil(W * fov_deg / 360.0));
  if (win % 2 == 0) ++win;
  if (win < 1) win = 1;
  const int half = (win - 1) / 2;

  PeakSet out;
  for (int c = 0; c < W; ++c) {
    const double v = y_w[static_cast<size_t>(c)];
    if (v < min_strength) continue;
    bool is_peak = true;
    for (int d = -half; d <= half && is_peak; ++d) {
      if (d == 0) continue;
      const int o = (c + d % W + W) % W;
      const double u = y_w[static_cast<size_t>(o)];
      if (u > v || (u == v && o < c)) is_peak = false;
    }
    if (is_peak) {
      out.columns.push_back(c);
      out.strengths.push_back(v);
    }
  }
  check(out.columns.size() >= 4, ErrorCode::TooFewPeaks,
        "found " + std::to_string(out.columns.size()) +
            " corner peaks; a Manhattan room needs at least 4");
  return out;
}

// Ceiling-wall boundary projected to the plan view. Points come from the
// floor boundary distance (ceiling and floor share X, Z); columns with an
// invalid boundary pair or a clamped near-horizon distance are excluded.
struct CeilingTrace {
  int width = 0;
  std::vector<Vec2> points;   // per column
  std::vector<bool> valid;    // per column
};

struct HeightEstimate {
  double height = 0.0;
  CeilingTrace trace;
  int excluded_columns = 0;
};

inline HeightEstimate recover_height(const BoundaryMap& map, const CameraModel& cam) {
  const int W = map.width;
  HeightEstimate out;
  out.trace.width = W;
  out.trace.points.resize(static_cast<size_t>(W));
  out.trace.valid.assign(static_cast<size_t>(W), false);
  double hsum = 0.0;
  int used = 0;
  for (int c = 0; c < W; ++c) {
    if (!map.column_valid(c)) {
      ++out.excluded_columns;
      continue;
    }
    const double d = floor_boundary_to_distance(map.lat_f(c), cam);
    if (d >= kMaxFloorDistance * (1.0 - 1e-9)) {
      ++out.excluded_columns;
      continue;
    }
    const double h = ceiling_height_at_column(map.lat_c(c), d, cam);
    const double lon = lon_of_col(c, W);
    out.trace.points[static_cast<size_t>(c)] = {d * std::sin(lon), d * std::cos(lon)};
    out.trace.valid[static_cast<size_t>(c)] = true;
    hsum += h;
    ++used;
  }
  check(used > 0, ErrorCode::NoValidColumns, "no usable boundary columns");
  out.height = hsum / used;
  return out;
}

namespace detail {

enum class WallAxis { ConstX, ConstZ };  // line x = offset / line z = offset

struct Wall {
  WallAxis axis = WallAxis::ConstX;
  double offset = 0.0;
};

inline double coord_on(const Vec2& p, WallAxis a) {
  return a == WallAxis::ConstX ? p.x : p.z;
}

// Highest score = most part points within 0.16 m of the axis-aligned line;
// ties prefer orientations orthogonal to already-fixed neighbors, then the
// smaller total in-band residual (candidates whose band covers the same
// point set would otherwise tie, and a near-corner stray point must not
// outrank the wall it strayed from), then the smaller offset magnitude.
inline Wall select_wall(const std::vector<Vec2>& pts,
                        const Wall* prev_fixed, const Wall* next_fixed) {
  constexpr double kBand = 0.16;
  Wall best;
  int best_score = -1;
  int best_consistency = -1;
  double best_residual = std::numeric_limits<double>::infinity();
  double best_abs = std::numeric_limits<double>::infinity();
  for (WallAxis axis : {WallAxis::ConstX, WallAxis::ConstZ}) {
    int consistency = 0;
    if (prev_fixed && prev_fixed->axis != axis) ++consistency;
    if (next_fixed && next_fixed->axis != axis) ++consistency;
    for (const Vec2& cand : pts) {
      const double offset = coord_on(cand, axis);
      int score = 0;
      double residual = 0.0;
      for (const Vec2& p : pts) {
        const double d = std::abs(coord_on(p, axis) - offset);
        if (d <= kBand) {
          ++score;
          residual += d;
        }
      }
      const double a = std::abs(offset);
      const bool better =
          score > best_score ||
          (score == best_score &&
           (consistency > best_consistency ||
            (consistency == best_consistency &&
             (residual < best_residual - 1e-12 ||
              (residual <= best_residual + 1e-12 && a < best_abs)))));
      if (better) {
        best_score = score;
        best_consistency = consistency;
        best_residual = residual;
        best_abs = a;
        best = {axis, offset};
      }
    }
  }
  return best;
}

}  // namespace detail

// Plan-view wall regression with Manhattan enforcement. The trace is split
// into parts at the peak columns (inclusive of the left peak, exclusive of
// the right); each part selects the best-scoring axis-aligned wall line; if
// two consecutive walls come out parallel at different offsets, a corner was
// occluded or undetected and an orthogonal connecting wall is inserted at
// the junction. The floor polygon shares the ceiling polygon's X and Z.
inline RoomLayout3D fit_walls(const CeilingTrace& trace, const PeakSet& peaks,
                              double height,
                              double camera_height = kDefaultCameraHeight) {
  check(peaks.columns.size() >= 4, ErrorCode::TooFewPeaks, "fit_walls: need >= 4 peaks");
  const int W = trace.width;
  const int n = static_cast<int>(peaks.columns.size());

  // part i = circular column range [peak_i, peak_{i+1})
  std::vector<std::vector<Vec2>> parts(static_cast<size_t>(n));
  std::vector<std::vector<int>> part_cols(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int c0 = peaks.columns[static_cast<size_t>(i)];
    const int c1 = peaks.columns[static_cast<size_t>((i + 1) % n)];
    const int len = (c1 - c0 + W) % W;  // >= 1, peaks are distinct
    for (int d = 0; d < len; ++d) {
      const int c = (c0 + d) % W;
      if (!trace.valid[static_cast<size_t>(c)]) continue;
      parts[static_cast<size_t>(i)].push_back(trace.points[static_cast<size_t>(c)]);
      part_cols[static_cast<size_t>(i)].push_back(c);
    }
    check(parts[static_cast<size_t>(i)].size() >= 2, ErrorCode::DegeneratePart,
          "part " + std::to_string(i) + " has fewer than 2 trace points");
  }

  std::vector<detail::Wall> walls(static_cast<size_t>(n));
  std::vector<bool> fixed(static_cast<size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    const int prev = (i + n - 1) % n, next = (i + 1) % n;
    walls[static_cast<size_t>(i)] = detail::select_wall(
        parts[static_cast<size_t>(i)],
        fixed[static_cast<size_t>(prev)] ? &walls[static_cast<size_t>(prev)] : nullptr,
        fixed[static_cast<size_t>(next)] ? &walls[static_cast<size_t>(next)] : nullptr);
    fixed[static_cast<size_t>(i)] = true;
  }

  // Connector offset for an occluded corner between parallel walls: prefer
  // trace points near the junction that lie outside the 0.16 m band of both
  // parallel lines (those sit on the missing wall itself, so their coordinate
  // is exact); fall back to the junction trace point.
  auto connector_offset = [&](int prev_part, int cur_part, detail::WallAxis ortho,
                              double off_prev, double off_cur) {
    const detail::WallAxis par =
        ortho == detail::WallAxis::ConstX ? detail::WallAxis::ConstZ
                                          : detail::WallAxis::ConstX;
    auto off_band = [&](const Vec2& p) {
      const double v = detail::coord_on(p, par);
      return std::abs(v - off_prev) > 0.16 && std::abs(v - off_cur) > 0.16;
    };
    const auto& cur_pts = parts[static_cast<size_t>(cur_part)];
    for (const Vec2& p : cur_pts)
      if (off_band(p)) return detail::coord_on(p, ortho);
    const auto& prev_pts = parts[static_cast<size_t>(prev_part)];
    for (auto it = prev_pts.rbegin(); it != prev_pts.rend(); ++it)
      if (off_band(*it)) return detail::coord_on(*it, ortho);
    return detail::coord_on(cur_pts.front(), ortho);
  };

  // Manhattan pass: merge collinear neighbors, insert a connector where two
  // consecutive walls come out parallel at different offsets.
  struct Seg {
    detail::Wall wall;
    int part = -1;  // source part; -1 for inserted connectors
  };
  std::vector<Seg> seq;
  for (int i = 0; i < n; ++i) {
    const Seg cur{walls[static_cast<size_t>(i)], i};
    if (!seq.empty() && seq.back().wall.axis == cur.wall.axis) {
      if (std::abs(seq.back().wall.offset - cur.wall.offset) < 1e-9) continue;  // merge
      const detail::WallAxis ortho = cur.wall.axis == detail::WallAxis::ConstX
                                         ? detail::WallAxis::ConstZ
                                         : detail::WallAxis::ConstX;
      seq.push_back({{ortho, connector_offset(seq.back().part, i, ortho,
                                              seq.back().wall.offset, cur.wall.offset)},
                     -1});
    }
    seq.push_back(cur);
  }
  // wrap-around junction
  while (seq.size() >= 2 && seq.back().wall.axis == seq.front().wall.axis) {
    if (std::abs(seq.back().wall.offset - seq.front().wall.offset) < 1e-9) {
      seq.pop_back();  // merge across the seam
      continue;
    }
    const detail::WallAxis ortho = seq.front().wall.axis == detail::WallAxis::ConstX
                                       ? detail::WallAxis::ConstZ
                                       : detail::WallAxis::ConstX;
    seq.push_back({{ortho, connector_offset(seq.back().part < 0 ? n - 1 : seq.back().part,
                                            0, ortho, seq.back().wall.offset,
                                            seq.front().wall.offset)},
                   -1});
    break;
  }
  check(seq.size() >= 4, ErrorCode::DegeneratePart, "fewer than 4 walls after merging");

  RoomLayout3D out;
  out.height = height;
  out.camera_height = camera_height;
  const size_t m = seq.size();
  for (size_t i = 0; i < m; ++i) {
    const detail::Wall& a = seq[i].wall;
    const detail::Wall& b = seq[(i + 1) % m].wall;
    check(a.axis != b.axis, ErrorCode::DegeneratePart,
          "adjacent walls remained parallel");
    const double x = a.axis == detail::WallAxis::ConstX ? a.offset : b.offset;
    const double z = a.axis == detail::WallAxis::ConstZ ? a.offset : b.offset;
    out.footprint.push_back({x, z});
  }
  for (size_t i = 0; i < m; ++i) {
    const Vec2& p = out.footprint[i];
    const Vec2& q = out.footprint[(i + 1) % m];
    check(std::abs(p.x - q.x) > 1e-9 || std::abs(p.z - q.z) > 1e-9,
          ErrorCode::DegeneratePart, "inserted corners collide");
  }
  make_ccw(out.footprint);
  check(is_rectilinear(out.footprint), ErrorCode::InvalidLayout,
        "recovered footprint is not rectilinear");
  check(polygon_is_simple(out.footprint), ErrorCode::InvalidLayout,
        "recovered footprint self-intersects");
  return out;
}

struct RecoveryResult {
  RoomLayout3D layout;
  PeakSet peaks;
  HeightEstimate height;
};

inline RecoveryResult recover_layout(const BoundaryMap& map, const CameraModel& cam) {
  RecoveryResult res;
  res.peaks = find_peaks(map.y_w, map.width);
  res.height = recover_height(map, cam);
  res.layout = fit_walls(res.height.trace, res.peaks, res.height.height,
                         cam.height_m);
  return res;
}

inline nlohmann::json recovery_to_json(const RecoveryResult& r) {
  nlohmann::json j = layout_to_json(r.layout);
  j["corner_columns"] = r.peaks.columns;
  return j;
}

inline void write_trace_csv(const std::filesystem::path& path, const CeilingTrace& t) {
  std::ofstream f(path);
  check(f.good(), ErrorCode::IoError, "cannot write " + path.string());
  f << "col,x,z,valid\n";
  f.precision(17);
  for (int c = 0; c < t.width; ++c)
    f << c << ',' << t.points[static_cast<size_t>(c)].x << ','
      << t.points[static_cast<size_t>(c)].z << ','
      << (t.valid[static_cast<size_t>(c)] ? 1 : 0) << "\n";
}

}  // namespace omni
