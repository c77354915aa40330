#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "omni/common.hpp"

namespace omni {

// Plan-view point in meters; x right, z forward (lon = 0 looks along +z).
struct Vec2 {
  double x = 0.0;
  double z = 0.0;
};

inline double polygon_area_signed(const std::vector<Vec2>& poly) {
  double a = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    a += p.x * q.z - q.x * p.z;
  }
  return 0.5 * a;
}

inline double polygon_area(const std::vector<Vec2>& poly) {
  return std::abs(polygon_area_signed(poly));
}

inline void make_ccw(std::vector<Vec2>& poly) {
  if (polygon_area_signed(poly) < 0.0) std::reverse(poly.begin(), poly.end());
}

// Edges must alternate between x-parallel (constant z) and z-parallel
// (constant x), with no zero-length edges.
inline bool is_rectilinear(const std::vector<Vec2>& poly, double tol = 1e-9) {
  const size_t n = poly.size();
  if (n < 4 || n % 2 != 0) return false;
  int prev_axis = -1;  // 0 = x-parallel, 1 = z-parallel
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    const double dx = std::abs(q.x - p.x);
    const double dz = std::abs(q.z - p.z);
    int axis;
    if (dz <= tol && dx > tol)
      axis = 0;
    else if (dx <= tol && dz > tol)
      axis = 1;
    else
      return false;
    if (prev_axis == axis) return false;
    prev_axis = axis;
  }
  return true;
}

// Even-odd test, ray cast toward +x.
inline bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool inside = false;
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[j];
    const Vec2& b = poly[i];
    if ((b.z > p.z) != (a.z > p.z)) {
      const double x_cross = b.x + (p.z - b.z) * (a.x - b.x) / (a.z - b.z);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double ex = b.x - a.x, ez = b.z - a.z;
  const double len2 = ex * ex + ez * ez;
  double t = len2 > 0.0 ? ((p.x - a.x) * ex + (p.z - a.z) * ez) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * ex);
  const double dz = p.z - (a.z + t * ez);
  return std::hypot(dx, dz);
}

inline double min_clearance(const std::vector<Vec2>& poly, const Vec2& p) {
  double d = std::numeric_limits<double>::infinity();
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i)
    d = std::min(d, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
  return d;
}

struct RayHit {
  double t = 0.0;  // horizontal distance to the boundary
  int edge = -1;
};

// First boundary hit of the plan-view ray origin + t*(sin lon, cos lon),
// t > 0. The origin must be strictly inside the polygon.
inline RayHit raycast_boundary(const std::vector<Vec2>& poly, const Vec2& origin,
                               double lon) {
  const double dx = std::sin(lon), dz = std::cos(lon);
  const size_t n = poly.size();
  RayHit best;
  best.t = std::numeric_limits<double>::infinity();
  constexpr double eps = 1e-12;
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    if (std::abs(a.x - b.x) <= std::abs(a.z - b.z)) {
      // z-parallel edge at x = a.x
      if (std::abs(dx) < eps) continue;
      const double t = (a.x - origin.x) / dx;
      if (t <= eps || t >= best.t) continue;
      const double z = origin.z + t * dz;
      if (z >= std::min(a.z, b.z) - eps && z <= std::max(a.z, b.z) + eps) {
        best.t = t;
        best.edge = static_cast<int>(i);
      }
    } else {
      // x-parallel edge at z = a.z
      if (std::abs(dz) < eps) continue;
      const double t = (a.z - origin.z) / dz;
      if (t <= eps || t >= best.t) continue;
      const double x = origin.x + t * dx;
      if (x >= std::min(a.x, b.x) - eps && x <= std::max(a.x, b.x) + eps) {
        best.t = t;
        best.edge = static_cast<int>(i);
      }
    }
  }
  check(best.edge >= 0, ErrorCode::DegenerateRay, "ray escaped the footprint");
  return best;
}

inline bool segments_properly_intersect(const Vec2& a, const Vec2& b, const Vec2& c,
                                        const Vec2& d) {
  auto cross = [](const Vec2& o, const Vec2& p, const Vec2& q) {
    return (p.x - o.x) * (q.z - o.z) - (q.x - o.x) * (p.z - o.z);
  };
  const double d1 = cross(c, d, a), d2 = cross(c, d, b);
  const double d3 = cross(a, b, c), d4 = cross(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

// Every vertex (and hence every wall) is visible from p: no edge properly
// crosses a sight line. Cameras outside this kernel would face walls their
// panorama never shows.
inline bool sees_all_vertices(const std::vector<Vec2>& poly, const Vec2& p) {
  const size_t n = poly.size();
  for (size_t v = 0; v < n; ++v)
    for (size_t e = 0; e < n; ++e) {
      if (e == v || (e + 1) % n == v) continue;
      if (segments_properly_intersect(p, poly[v], poly[e], poly[(e + 1) % n]))
        return false;
    }
  return true;
}

inline bool polygon_is_simple(const std::vector<Vec2>& poly) {
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      // skip adjacent edges (they share an endpoint)
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_properly_intersect(poly[i], poly[(i + 1) % n], poly[j],
                                      poly[(j + 1) % n]))
        return false;
    }
  }
  return true;
}

// Recovered or ground-truth room: rectilinear footprint in the camera frame
// (camera at the plan origin), room height and camera height in meters.
struct RoomLayout3D {
  std::vector<Vec2> footprint;
  double height = 0.0;
  double camera_height = kDefaultCameraHeight;

  void validate() const {
    check(footprint.size() >= 4, ErrorCode::InvalidLayout, "footprint needs >= 4 corners");
    check(is_rectilinear(footprint), ErrorCode::InvalidLayout,
          "footprint is not rectilinear");
    check(height > camera_height && camera_height > 0.0, ErrorCode::InvalidLayout,
          "need height > camera height > 0");
  }
};

inline nlohmann::json layout_to_json(const RoomLayout3D& l) {
  nlohmann::json corners = nlohmann::json::array();
  for (const auto& v : l.footprint) corners.push_back({v.x, v.z});
  return {{"corners_xz", corners}, {"height", l.height},
          {"camera_height", l.camera_height}};
}

inline RoomLayout3D layout_from_json(const nlohmann::json& j) {
  RoomLayout3D l;
  for (const auto& c : j.at("corners_xz"))
    l.footprint.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
  l.height = j.at("height").get<double>();
  l.camera_height = j.at("camera_height").get<double>();
  return l;
}

}  // namespace omni
