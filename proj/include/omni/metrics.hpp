#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include "omni/boundary.hpp"
#include "omni/geom.hpp"
#include "omni/layout.hpp"

namespace omni {

// Per-pixel surface class rasterized from a boundary map: rows above the
// ceiling boundary are ceiling, below the floor boundary are floor, wall
// otherwise.
struct SurfaceMask {
  int H = 0, W = 0;
  std::vector<uint8_t> labels;  // 0 = ceiling, 1 = wall, 2 = floor

  static SurfaceMask from_boundary(const BoundaryMap& m, int H) {
    SurfaceMask s;
    s.H = H;
    s.W = m.width;
    s.labels.resize(static_cast<size_t>(H) * m.width);
    for (int c = 0; c < m.width; ++c) {
      const double lc = m.lat_c(c), lf = m.lat_f(c);
      for (int r = 0; r < H; ++r) {
        const double lat = lat_of_row(r, H);
        s.labels[static_cast<size_t>(r) * m.width + c] =
            lat > lc ? 0 : (lat < lf ? 2 : 1);
      }
    }
    return s;
  }
};

// Percentage of pixels whose surface class disagrees.
inline double pixel_error(const BoundaryMap& pred, const BoundaryMap& gt, int H) {
  check(pred.width == gt.width, ErrorCode::ShapeMismatch, "pixel_error: width mismatch");
  const SurfaceMask a = SurfaceMask::from_boundary(pred, H);
  const SurfaceMask b = SurfaceMask::from_boundary(gt, H);
  int64_t bad = 0;
  for (size_t i = 0; i < a.labels.size(); ++i)
    if (a.labels[i] != b.labels[i]) ++bad;
  return 100.0 * static_cast<double>(bad) / static_cast<double>(a.labels.size());
}

struct CornerPoint {
  double u = 0.0, v = 0.0;
};

// Ceiling and floor image points of every layout corner, circularly ordered
// by column.
inline std::vector<CornerPoint> layout_corner_pixels(const RoomLayout3D& l, int W,
                                                     int H) {
  struct Entry {
    double u, vc, vf;
  };
  std::vector<Entry> es;
  for (const auto& p : l.footprint) {
    const double d = std::hypot(p.x, p.z);
    const double u = col_of_lon(std::atan2(p.x, p.z), W);
    es.push_back({u, row_of_lat(std::atan((l.height - l.camera_height) / d), H),
                  row_of_lat(-std::atan(l.camera_height / d), H)});
  }
  std::sort(es.begin(), es.end(), [](const Entry& a, const Entry& b) { return a.u < b.u; });
  std::vector<CornerPoint> out;
  for (const auto& e : es) {
    out.push_back({e.u, e.vc});
    out.push_back({e.u, e.vf});
  }
  return out;
}

struct CornerErrorResult {
  double percent = 0.0;
  bool unequal_count = false;  // flagged results are excluded from aggregates
};

// Mean corner distance normalized by the image diagonal, matched under the
// circular alignment that minimizes the total distance. Both lists must be
// circularly ordered by corner column (as layout_corner_pixels emits them);
// they are not re-sorted here, so each corner's ceiling/floor pair stays
// adjacent. Lists with unequal counts are matched on the smaller count and
// flagged.
inline CornerErrorResult corner_error(const std::vector<CornerPoint>& pred,
                                      const std::vector<CornerPoint>& gt, int W, int H) {
  check(!pred.empty() && !gt.empty(), ErrorCode::EmptyCorners,
        "corner_error: empty corner list");
  const double diag = std::sqrt(static_cast<double>(W) * W + static_cast<double>(H) * H);
  auto dist = [](const CornerPoint& a, const CornerPoint& b) {
    return std::hypot(a.u - b.u, a.v - b.v);
  };

  CornerErrorResult res;
  if (pred.size() == gt.size()) {
    const size_t n = pred.size();
    double best = std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < n; ++r) {
      double total = 0.0;
      for (size_t i = 0; i < n; ++i) total += dist(pred[(i + r) % n], gt[i]);
      best = std::min(best, total);
    }
    res.percent = 100.0 * (best / static_cast<double>(n)) / diag;
    return res;
  }

  res.unequal_count = true;
  const auto& small = pred.size() < gt.size() ? pred : gt;
  const auto& large = pred.size() < gt.size() ? gt : pred;
  const size_t ns = small.size(), nl = large.size();
  double best = std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < nl; ++s) {
    double total = 0.0;
    for (size_t i = 0; i < ns; ++i)
      total += dist(small[i], large[(s + i * nl / ns) % nl]);
    best = std::min(best, total);
  }
  res.percent = 100.0 * (best / static_cast<double>(ns)) / diag;
  return res;
}

namespace detail {

struct RectXZ {
  double x1, x2, z1, z2;
};

// Slab decomposition of a simple rectilinear polygon into axis-aligned
// rectangles: between consecutive distinct x values, the interior z-intervals
// are read off the sorted crossings of the horizontal edges.
inline std::vector<RectXZ> decompose_rectilinear(const std::vector<Vec2>& poly) {
  std::set<double> xset;
  for (const auto& v : poly) xset.insert(v.x);
  std::vector<double> xs(xset.begin(), xset.end());
  std::vector<RectXZ> rects;
  const size_t n = poly.size();
  for (size_t s = 0; s + 1 < xs.size(); ++s) {
    const double xm = 0.5 * (xs[s] + xs[s + 1]);
    std::vector<double> zs;
    for (size_t i = 0; i < n; ++i) {
      const Vec2& a = poly[i];
      const Vec2& b = poly[(i + 1) % n];
      if (std::abs(a.z - b.z) < std::abs(a.x - b.x)) {  // x-parallel edge
        if (std::min(a.x, b.x) < xm && xm < std::max(a.x, b.x)) zs.push_back(a.z);
      }
    }
    std::sort(zs.begin(), zs.end());
    check(zs.size() % 2 == 0, ErrorCode::InvalidLayout,
          "decomposition found odd crossing count");
    for (size_t i = 0; i + 1 < zs.size(); i += 2)
      rects.push_back({xs[s], xs[s + 1], zs[i], zs[i + 1]});
  }
  return rects;
}

inline double rects_intersection_area(const std::vector<RectXZ>& A,
                                      const std::vector<RectXZ>& B) {
  double area = 0.0;
  for (const auto& a : A)
    for (const auto& b : B) {
      const double x = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
      const double z = std::min(a.z2, b.z2) - std::max(a.z1, b.z1);
      if (x > 0 && z > 0) area += x * z;
    }
  return area;
}

}  // namespace detail

// Volume IoU of two vertical prisms sharing the camera frame: floor planes at
// -camera_height, ceilings at height - camera_height.
inline double iou_3d(const RoomLayout3D& a, const RoomLayout3D& b) {
  a.validate();
  b.validate();
  const double area_a = polygon_area(a.footprint);
  const double area_b = polygon_area(b.footprint);
  const double inter_area = detail::rects_intersection_area(
      detail::decompose_rectilinear(a.footprint), detail::decompose_rectilinear(b.footprint));
  const double lo = std::max(-a.camera_height, -b.camera_height);
  const double hi = std::min(a.height - a.camera_height, b.height - b.camera_height);
  const double h_overlap = std::max(0.0, hi - lo);
  const double inter = inter_area * h_overlap;
  const double uni = area_a * a.height + area_b * b.height - inter;
  return inter / uni;
}

struct RowGroup {
  int index = 0;
  int pole_distance_lo = 0, pole_distance_hi = 0;  // inclusive
  bool partial = false;
  int64_t pixels = 0;
  int64_t disagreements = 0;

  double error_pct() const {
    return pixels ? 100.0 * static_cast<double>(disagreements) / static_cast<double>(pixels)
                  : 0.0;
  }
};

struct RowGroupErrors {
  int g_rows = 25;
  std::vector<RowGroup> groups;
};

// Pixel error restricted to bands of rows grouped by distance to the nearest
// pole (top and bottom rows pooled); row v belongs to group
// floor(min(v, H-1-v) / g_rows). The innermost group may be partial.
inline RowGroupErrors row_group_error(const BoundaryMap& pred, const BoundaryMap& gt,
                                      int H, int g_rows = 25) {
  check(pred.width == gt.width, ErrorCode::ShapeMismatch, "row_group_error: width");
  check(H >= 2 * g_rows, ErrorCode::ShapeMismatch,
        "row_group_error: need H >= 2 * g_rows");
  const SurfaceMask a = SurfaceMask::from_boundary(pred, H);
  const SurfaceMask b = SurfaceMask::from_boundary(gt, H);
  const int max_dist = (H - 1) / 2;
  const int ngroups = max_dist / g_rows + 1;

  RowGroupErrors out;
  out.g_rows = g_rows;
  out.groups.resize(static_cast<size_t>(ngroups));
  for (int g = 0; g < ngroups; ++g) {
    auto& grp = out.groups[static_cast<size_t>(g)];
    grp.index = g;
    grp.pole_distance_lo = g * g_rows;
    grp.pole_distance_hi = std::min((g + 1) * g_rows - 1, max_dist);
    grp.partial = (g + 1) * g_rows - 1 > max_dist;
  }
  const int W = pred.width;
  for (int v = 0; v < H; ++v) {
    const int g = std::min(v, H - 1 - v) / g_rows;
    auto& grp = out.groups[static_cast<size_t>(g)];
    grp.pixels += W;
    const uint8_t* ra = a.labels.data() + static_cast<size_t>(v) * W;
    const uint8_t* rb = b.labels.data() + static_cast<size_t>(v) * W;
    for (int c = 0; c < W; ++c)
      if (ra[c] != rb[c]) ++grp.disagreements;
  }
  return out;
}

}  // namespace omni
