#pragma once

#include <algorithm>
#include <cmath>

#include "omni/common.hpp"

namespace omni {

// Angle convention: latitude in [-pi/2, +pi/2], +pi/2 at the image top
// (zenith); longitude in [-pi, +pi), wrapping. Pixel centers sit at
// half-integer angular offsets, so pixel (i, j) of a WxH panorama maps to
//   lon = ((i + 0.5) / W) * 2pi - pi,   lat = pi/2 - ((j + 0.5) / H) * pi.

inline int wrap_col(int c, int W) {
  c %= W;
  return c < 0 ? c + W : c;
}

inline double normalize_lon(double lon) {
  double x = lon - kTwoPi * std::floor((lon + kPi) / kTwoPi);
  // floor rounding can land exactly on +pi; fold it to -pi
  if (x >= kPi) x -= kTwoPi;
  return x;
}

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

struct CameraModel {
  double height_m = kDefaultCameraHeight;
  int width = 1024;
  int height = 512;
};

inline LatLon pixel_to_latlon(double u, double v, int W, int H) {
  const double vc = std::clamp(v, -0.5, H - 0.5);
  LatLon a;
  a.lon = normalize_lon(((u + 0.5) / W) * kTwoPi - kPi);
  a.lat = kHalfPi - ((vc + 0.5) / H) * kPi;
  return a;
}

inline PixelCoord latlon_to_pixel(const LatLon& a, int W, int H) {
  PixelCoord p;
  p.u = (normalize_lon(a.lon) + kPi) / kTwoPi * W - 0.5;
  p.v = (kHalfPi - a.lat) / kPi * H - 0.5;
  return p;
}

inline double lat_of_row(double v, int H) { return kHalfPi - ((v + 0.5) / H) * kPi; }
inline double lon_of_col(double u, int W) {
  return normalize_lon(((u + 0.5) / W) * kTwoPi - kPi);
}
inline double row_of_lat(double lat, int H) { return (kHalfPi - lat) / kPi * H - 0.5; }
inline double col_of_lon(double lon, int W) {
  return (normalize_lon(lon) + kPi) / kTwoPi * W - 0.5;
}

// Horizontal distance to the floor-wall boundary seen at latitude lat_f.
// Clamped to kMaxFloorDistance as lat_f -> 0-.
inline double floor_boundary_to_distance(double lat_f, const CameraModel& cam) {
  check(lat_f < 0.0, ErrorCode::NonNegativeLatitude,
        "floor boundary must be below the horizon");
  const double d = cam.height_m / std::tan(-lat_f);
  return std::min(d, kMaxFloorDistance);
}

// Room height implied by the ceiling boundary at latitude lat_c for a column
// whose wall is at horizontal distance d; the ceiling shares the floor
// point's X and Z.
inline double ceiling_height_at_column(double lat_c, double d, const CameraModel& cam) {
  check(lat_c > 0.0, ErrorCode::NonPositiveLatitude,
        "ceiling boundary must be above the horizon");
  return cam.height_m + d * std::tan(lat_c);
}

// Inverse gnomonic projection: tangent-plane offsets (x, y) around `center`
// back to the sphere. rho = 0 is the identity.
inline LatLon gnomonic_inverse(const LatLon& center, double x, double y) {
  const double rho = std::hypot(x, y);
  if (rho == 0.0) return {center.lat, normalize_lon(center.lon)};
  const double nu = std::atan(rho);
  const double sin_nu = std::sin(nu);
  const double cos_nu = std::cos(nu);
  const double sin_lat0 = std::sin(center.lat);
  const double cos_lat0 = std::cos(center.lat);
  LatLon out;
  out.lat = std::asin(std::clamp(cos_nu * sin_lat0 + y * sin_nu * cos_lat0 / rho, -1.0, 1.0));
  out.lon = normalize_lon(center.lon +
                          std::atan2(x * sin_nu,
                                     rho * cos_lat0 * cos_nu - y * sin_lat0 * sin_nu));
  return out;
}

// Unit view ray for (lat, lon); x right, y up, z forward at lon = 0.
struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 latlon_to_ray(const LatLon& a) {
  const double cl = std::cos(a.lat);
  return {std::sin(a.lon) * cl, std::sin(a.lat), std::cos(a.lon) * cl};
}

inline LatLon ray_to_latlon(const Vec3& r) {
  const double horiz = std::hypot(r.x, r.z);
  LatLon a;
  a.lat = std::atan2(r.y, horiz);
  a.lon = normalize_lon(std::atan2(r.x, r.z));
  return a;
}

}  // namespace omni
