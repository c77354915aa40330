#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "omni/boundary.hpp"
#include "omni/geom.hpp"
#include "omni/layout.hpp"
#include "omni/pngio.hpp"
#include "omni/rng.hpp"
#include "omni/tensor.hpp"

namespace omni {

// Generative description of a synthetic Manhattan room. The footprint lives
// in world coordinates; the camera stands strictly inside at 1.6 m with at
// least `clearance` to every wall. Materials and pixel noise are re-derived
// from the seed.
struct RoomSpec {
  std::vector<Vec2> footprint;  // CCW, axis-aligned edges, 4 or 6 vertices
  double height_m = 3.0;
  Vec2 camera;
  double camera_height = kDefaultCameraHeight;
  uint64_t seed = 0;

  bool is_l_shape() const { return footprint.size() == 6; }
};

struct GenConfig {
  double extent_min = 3.0, extent_max = 8.0;
  double height_min = 2.4, height_max = 3.6;
  double clearance = 0.3;
  double l_fraction = 0.5;
  double noise_sigma = 0.02;
  // corners closer than the peak detector's 5-degree suppression window merge
  // into one peak and cannot be told apart again; keep them separated
  double min_corner_separation_deg = 3.2;
};

inline RoomLayout3D layout_from_spec(const RoomSpec& spec) {
  RoomLayout3D l;
  l.footprint.reserve(spec.footprint.size());
  for (const auto& v : spec.footprint)
    l.footprint.push_back({v.x - spec.camera.x, v.z - spec.camera.z});
  l.height = spec.height_m;
  l.camera_height = spec.camera_height;
  return l;
}

inline RoomSpec sample_room(const GenConfig& cfg, uint64_t seed) {
  Rng rng(seed, "room");
  RoomSpec spec;
  spec.seed = seed;
  const double wx = rng.uniform(cfg.extent_min, cfg.extent_max);
  const double wz = rng.uniform(cfg.extent_min, cfg.extent_max);
  spec.height_m = rng.uniform(cfg.height_min, cfg.height_max);
  const bool l_shape = rng.uniform() < cfg.l_fraction;

  std::vector<Vec2> poly;
  if (!l_shape) {
    poly = {{0, 0}, {wx, 0}, {wx, wz}, {0, wz}};
  } else {
    const double cx = rng.uniform(0.3, 0.6) * wx;
    const double cz = rng.uniform(0.3, 0.6) * wz;
    poly = {{0, 0}, {wx, 0}, {wx, wz - cz}, {wx - cx, wz - cz}, {wx - cx, wz}, {0, wz}};
  }
  // random quarter-turn so the cut corner is not always the same
  const int quarter = static_cast<int>(rng.below(4));
  for (int q = 0; q < quarter; ++q)
    for (auto& v : poly) v = Vec2{v.z, -v.x};
  make_ccw(poly);
  spec.footprint = poly;

  // rejection-sample the camera: inside, clear of every wall, and in the
  // visibility kernel so the panorama shows the whole boundary (L-shaped
  // footprints are star-shaped, so the kernel is never empty)
  double lox = poly[0].x, hix = poly[0].x, loz = poly[0].z, hiz = poly[0].z;
  for (const auto& v : poly) {
    lox = std::min(lox, v.x);
    hix = std::max(hix, v.x);
    loz = std::min(loz, v.z);
    hiz = std::max(hiz, v.z);
  }
  auto corners_separated = [&](const Vec2& c) {
    const double min_sep = deg2rad(cfg.min_corner_separation_deg);
    for (size_t i = 0; i < poly.size(); ++i)
      for (size_t j = i + 1; j < poly.size(); ++j) {
        const double a = std::atan2(poly[i].x - c.x, poly[i].z - c.z);
        const double b = std::atan2(poly[j].x - c.x, poly[j].z - c.z);
        const double d = std::abs(normalize_lon(a - b));
        if (d < min_sep) return false;
      }
    return true;
  };
  for (int tries = 0; tries < 100000; ++tries) {
    Vec2 c{rng.uniform(lox, hix), rng.uniform(loz, hiz)};
    if (point_in_polygon(poly, c) && min_clearance(poly, c) >= cfg.clearance &&
        sees_all_vertices(poly, c) && corners_separated(c)) {
      spec.camera = c;
      return spec;
    }
  }
  fail(ErrorCode::DegenerateRay, "could not place camera inside footprint");
}

struct GtBoundaries {
  BoundaryMap map;
  std::vector<double> corner_cols;  // continuous columns of footprint vertices
  std::vector<double> wall_dist;    // per-column horizontal distance
  std::vector<int> wall_edge;       // per-column footprint edge index
};

// Ray-cast ground truth: per column, the wall distance d gives
// y_f = -atan(ch/d)/(pi/2) and y_c = atan((h-ch)/d)/(pi/2); corner columns
// are the longitudes of the footprint vertices; y_w is the smoothed target.
inline GtBoundaries gt_boundaries(const RoomSpec& spec, int W) {
  check(point_in_polygon(spec.footprint, spec.camera), ErrorCode::DegenerateRay,
        "camera must be strictly inside the footprint");
  GtBoundaries out;
  out.map = BoundaryMap::zeros(W);
  out.wall_dist.resize(static_cast<size_t>(W));
  out.wall_edge.resize(static_cast<size_t>(W));
  const double ch = spec.camera_height;
  for (int c = 0; c < W; ++c) {
    const double lon = lon_of_col(c, W);
    const RayHit hit = raycast_boundary(spec.footprint, spec.camera, lon);
    out.wall_dist[static_cast<size_t>(c)] = hit.t;
    out.wall_edge[static_cast<size_t>(c)] = hit.edge;
    out.map.y_f[static_cast<size_t>(c)] = -std::atan(ch / hit.t) / kHalfPi;
    out.map.y_c[static_cast<size_t>(c)] = std::atan((spec.height_m - ch) / hit.t) / kHalfPi;
  }
  for (const auto& v : spec.footprint) {
    const double lon = std::atan2(v.x - spec.camera.x, v.z - spec.camera.z);
    out.corner_cols.push_back(col_of_lon(lon, W));
  }
  out.map.y_w = smooth_corner_target(out.corner_cols, W);
  return out;
}

namespace detail {

struct Material {
  std::array<double, 3> albedo;
  int texture;  // 0 = checker, 1 = gradient
};

// Rotating palette keeps adjacent walls distinguishable; brightness jitter
// and textures come from the room seed.
inline std::vector<Material> room_materials(const RoomSpec& spec, size_t walls) {
  static constexpr std::array<std::array<double, 3>, 6> palette = {{
      {0.85, 0.45, 0.35},
      {0.40, 0.65, 0.85},
      {0.55, 0.80, 0.45},
      {0.85, 0.75, 0.35},
      {0.65, 0.45, 0.80},
      {0.45, 0.80, 0.75},
  }};
  Rng rng(spec.seed, "materials");
  const size_t offset = rng.below(6);
  std::vector<Material> mats;
  for (size_t i = 0; i < walls + 2; ++i) {  // walls, then floor, then ceiling
    Material m;
    const auto& base = palette[(offset + i) % 6];
    const double gain = rng.uniform(0.7, 1.0);
    for (int k = 0; k < 3; ++k) m.albedo[static_cast<size_t>(k)] = base[static_cast<size_t>(k)] * gain;
    m.texture = rng.coin() ? 1 : 0;
    mats.push_back(m);
  }
  // floor and ceiling toward gray so the wall band stands out
  mats[walls].albedo = {0.55 * rng.uniform(0.8, 1.1), 0.5 * rng.uniform(0.8, 1.1),
                        0.45 * rng.uniform(0.8, 1.1)};
  mats[walls + 1].albedo = {0.9 * rng.uniform(0.85, 1.0), 0.9 * rng.uniform(0.85, 1.0),
                            0.88 * rng.uniform(0.85, 1.0)};
  return mats;
}

inline double texture_value(int kind, double a, double b) {
  if (kind == 0) {
    const long pa = static_cast<long>(std::floor(a / 0.5));
    const long pb = static_cast<long>(std::floor(b / 0.5));
    return ((pa + pb) & 1) ? 1.0 : 0.72;
  }
  const double f = a / 2.0 - std::floor(a / 2.0);
  return 0.7 + 0.3 * f;
}

}  // namespace detail

// Render the panorama and the per-pixel surface id: 0 = ceiling, 1 = wall,
// 2 = floor. Deterministic per spec.seed.
inline Tensor<double> render_with_mask(const RoomSpec& spec, int W, int H,
                                       std::vector<uint8_t>* mask_out,
                                       double noise_sigma = 0.02) {
  const GtBoundaries gt = gt_boundaries(spec, W);
  const auto mats = detail::room_materials(spec, spec.footprint.size());
  const double ch = spec.camera_height;
  const double h = spec.height_m;

  Tensor<double> img = Tensor<double>::zeros({3, H, W});
  if (mask_out) mask_out->assign(static_cast<size_t>(H) * W, 1);
  const size_t plane = static_cast<size_t>(H) * W;

  for (int r = 0; r < H; ++r) {
    const double lat = lat_of_row(r, H);
    for (int c = 0; c < W; ++c) {
      const double lon = lon_of_col(c, W);
      const double d = gt.wall_dist[static_cast<size_t>(c)];
      const double lat_c = gt.map.lat_c(c);
      const double lat_f = gt.map.lat_f(c);
      const Vec3 dir = latlon_to_ray({lat, lon});
      const detail::Material* mat;
      double ta, tb;  // texture plane coordinates
      uint8_t label;
      if (lat > lat_c) {
        const double t = (h - ch) / dir.y;
        ta = spec.camera.x + t * dir.x;
        tb = spec.camera.z + t * dir.z;
        mat = &mats[spec.footprint.size() + 1];
        label = 0;
      } else if (lat < lat_f) {
        const double t = -ch / dir.y;
        ta = spec.camera.x + t * dir.x;
        tb = spec.camera.z + t * dir.z;
        mat = &mats[spec.footprint.size()];
        label = 2;
      } else {
        const int e = gt.wall_edge[static_cast<size_t>(c)];
        const Vec2& a = spec.footprint[static_cast<size_t>(e)];
        const Vec2& b = spec.footprint[(static_cast<size_t>(e) + 1) % spec.footprint.size()];
        const double hx = spec.camera.x + d * std::sin(lon);
        const double hz = spec.camera.z + d * std::cos(lon);
        ta = std::abs(a.x - b.x) > std::abs(a.z - b.z) ? hx : hz;  // along-wall axis
        tb = ch + d * std::tan(lat);                               // height above floor
        mat = &mats[static_cast<size_t>(e)];
        label = 1;
      }
      const double tex = detail::texture_value(mat->texture, ta, tb);
      for (int ch3 = 0; ch3 < 3; ++ch3)
        img.data()[ch3 * plane + static_cast<size_t>(r) * W + c] =
            mat->albedo[static_cast<size_t>(ch3)] * tex;
      if (mask_out) (*mask_out)[static_cast<size_t>(r) * W + c] = label;
    }
  }

  if (noise_sigma > 0.0) {
    Rng noise(spec.seed, "noise");
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c)
        for (int ch3 = 0; ch3 < 3; ++ch3) {
          double& v = img.data()[ch3 * plane + static_cast<size_t>(r) * W + c];
          v = std::clamp(v + noise.normal(0.0, noise_sigma), 0.0, 1.0);
        }
  }
  return img;
}

inline Tensor<double> render(const RoomSpec& spec, int W, int H,
                             double noise_sigma = 0.02) {
  return render_with_mask(spec, W, H, nullptr, noise_sigma);
}

struct StretchFactors {
  double kx = 1.0, ky = 1.0, kz = 1.0;
};

// Scene stretch: footprint scaled by (kx, kz) about the camera axis, heights
// by ky about the floor; the camera itself stays at 1.6 m.
inline RoomLayout3D stretch_layout(const RoomLayout3D& layout, const StretchFactors& k) {
  check(k.kx > 0 && k.ky > 0 && k.kz > 0, ErrorCode::InvalidFactor,
        "stretch factors must be positive");
  RoomLayout3D out;
  out.footprint.reserve(layout.footprint.size());
  for (const auto& v : layout.footprint) out.footprint.push_back({v.x * k.kx, v.z * k.kz});
  out.height = layout.height * k.ky;
  out.camera_height = layout.camera_height;
  return out;
}

inline GtBoundaries layout_boundaries(const RoomLayout3D& layout, int W) {
  RoomSpec s;
  s.footprint = layout.footprint;
  s.height_m = layout.height;
  s.camera = {0.0, 0.0};
  s.camera_height = layout.camera_height;
  return gt_boundaries(s, W);
}

// PanoStretch on an image plus its layout: for every output pixel, cast the
// view ray into the stretched scene, pull the hit point back through the
// inverse stretch, and bilinearly sample the source panorama there.
template <typename T>
std::pair<Tensor<T>, RoomLayout3D> pano_stretch(const Tensor<T>& image,
                                                const RoomLayout3D& layout,
                                                const StretchFactors& k) {
  check(image.ndim() == 3 && image.dim(0) == 3, ErrorCode::ShapeMismatch,
        "pano_stretch: [3, H, W] image required");
  const int H = image.dim(1), W = image.dim(2);
  const RoomLayout3D stretched = stretch_layout(layout, k);
  const GtBoundaries gt = layout_boundaries(stretched, W);
  const double ch = layout.camera_height;
  const double h2 = stretched.height;

  Tensor<T> out = Tensor<T>::zeros({3, H, W});
  const size_t plane = static_cast<size_t>(H) * W;
  const T* src = image.data();
  for (int c = 0; c < W; ++c) {
    const double lon = lon_of_col(c, W);
    const double d = gt.wall_dist[static_cast<size_t>(c)];
    const double lat_c = gt.map.lat_c(c);
    const double lat_f = gt.map.lat_f(c);
    for (int r = 0; r < H; ++r) {
      const double lat = lat_of_row(r, H);
      const Vec3 dir = latlon_to_ray({lat, lon});
      double t;
      if (lat > lat_c)
        t = (h2 - ch) / dir.y;
      else if (lat < lat_f)
        t = -ch / dir.y;
      else
        t = d / std::cos(lat);
      const Vec3 hit{t * dir.x, t * dir.y, t * dir.z};
      const Vec3 back{hit.x / k.kx, (hit.y + ch) / k.ky - ch, hit.z / k.kz};
      const PixelCoord p = latlon_to_pixel(ray_to_latlon(back), W, H);
      // bilinear with horizontal wrap, vertical clamp
      const double v = std::clamp(p.v, 0.0, static_cast<double>(H - 1));
      const int r0 = static_cast<int>(std::floor(v));
      const int r1 = std::min(r0 + 1, H - 1);
      const double fv = v - r0;
      const double uf = std::floor(p.u);
      const int c0 = wrap_col(static_cast<int>(uf), W);
      const int c1 = wrap_col(c0 + 1, W);
      const double fu = p.u - uf;
      for (int ch3 = 0; ch3 < 3; ++ch3) {
        const T* pl = src + ch3 * plane;
        const double val =
            (1 - fv) * ((1 - fu) * pl[static_cast<size_t>(r0) * W + c0] +
                        fu * pl[static_cast<size_t>(r0) * W + c1]) +
            fv * ((1 - fu) * pl[static_cast<size_t>(r1) * W + c0] +
                  fu * pl[static_cast<size_t>(r1) * W + c1]);
        out.data()[ch3 * plane + static_cast<size_t>(r) * W + c] = static_cast<T>(val);
      }
    }
  }
  return {std::move(out), stretched};
}

// BoundaryMap-only stretch. The wall trace between sampled columns is
// interpolated linearly, so this route is approximate; the layout route is
// exact and is what training uses.
inline BoundaryMap pano_stretch_map(const BoundaryMap& map, const StretchFactors& k,
                                    double camera_height = kDefaultCameraHeight) {
  check(k.kx > 0 && k.ky > 0 && k.kz > 0, ErrorCode::InvalidFactor,
        "stretch factors must be positive");
  const int W = map.width;
  const double ch = camera_height;
  auto interp = [&](const std::vector<double>& arr, double u) {
    const double uu = u - W * std::floor(u / W);
    const int i0 = static_cast<int>(std::floor(uu)) % W;
    const int i1 = (i0 + 1) % W;
    const double f = uu - std::floor(uu);
    return (1 - f) * arr[static_cast<size_t>(i0)] + f * arr[static_cast<size_t>(i1)];
  };
  std::vector<double> dist(static_cast<size_t>(W)), hcol(static_cast<size_t>(W));
  for (int c = 0; c < W; ++c) {
    const double d = ch / std::tan(-map.lat_f(c));
    dist[static_cast<size_t>(c)] = d;
    hcol[static_cast<size_t>(c)] = ch + d * std::tan(map.lat_c(c));
  }
  BoundaryMap out = BoundaryMap::zeros(W);
  for (int c = 0; c < W; ++c) {
    const double lon_o = lon_of_col(c, W);
    const double lon_s = std::atan2(std::sin(lon_o) / k.kx, std::cos(lon_o) / k.kz);
    const double us = col_of_lon(lon_s, W);
    const double ds = interp(dist, us);
    const double hs = interp(hcol, us);
    const double x = ds * std::sin(lon_s) * k.kx;
    const double z = ds * std::cos(lon_s) * k.kz;
    const double dn = std::hypot(x, z);
    out.y_f[static_cast<size_t>(c)] = -std::atan(ch / dn) / kHalfPi;
    out.y_c[static_cast<size_t>(c)] = std::atan((hs * k.ky - ch) / dn) / kHalfPi;
    out.y_w[static_cast<size_t>(c)] = interp(map.y_w, us);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset directory: NNNNN.png + NNNNN.json per sample.

struct DatasetSample {
  Tensor<double> image;  // [3, H, W], values in [0, 1]
  BoundaryMap gt;
  RoomSpec spec;
  std::vector<double> corner_cols;
};

inline nlohmann::json roomspec_to_json(const RoomSpec& s) {
  nlohmann::json fp = nlohmann::json::array();
  for (const auto& v : s.footprint) fp.push_back({v.x, v.z});
  return {{"footprint_world", fp},
          {"height_m", s.height_m},
          {"camera_xz", {s.camera.x, s.camera.z}},
          {"camera_height", s.camera_height},
          {"seed", s.seed}};
}

inline RoomSpec roomspec_from_json(const nlohmann::json& j) {
  RoomSpec s;
  for (const auto& v : j.at("footprint_world"))
    s.footprint.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  s.height_m = j.at("height_m").get<double>();
  s.camera = {j.at("camera_xz").at(0).get<double>(), j.at("camera_xz").at(1).get<double>()};
  s.camera_height = j.at("camera_height").get<double>();
  s.seed = j.at("seed").get<uint64_t>();
  return s;
}

inline std::string sample_stem(int index) {
  std::ostringstream ss;
  ss << std::setfill('0') << std::setw(5) << index;
  return ss.str();
}

inline void save_dataset_sample(const std::filesystem::path& dir, int index,
                                const Tensor<double>& image, const RoomSpec& spec,
                                const GtBoundaries& gt) {
  const int H = image.dim(1), W = image.dim(2);
  std::vector<uint8_t> rgb(static_cast<size_t>(H) * W * 3);
  const size_t plane = static_cast<size_t>(H) * W;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        const double v = image.data()[ch * plane + static_cast<size_t>(r) * W + c];
        rgb[(static_cast<size_t>(r) * W + c) * 3 + ch] =
            static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
  const std::string stem = sample_stem(index);
  write_png_rgb8(dir / (stem + ".png"), W, H, rgb.data());

  nlohmann::json corner_pixels = nlohmann::json::array();
  const double ch_cam = spec.camera_height;
  for (size_t i = 0; i < spec.footprint.size(); ++i) {
    const Vec2& v = spec.footprint[i];
    const double d = std::hypot(v.x - spec.camera.x, v.z - spec.camera.z);
    const double u = gt.corner_cols[i];
    corner_pixels.push_back({{"u", u},
                             {"v_ceiling", row_of_lat(std::atan((spec.height_m - ch_cam) / d), H)},
                             {"v_floor", row_of_lat(-std::atan(ch_cam / d), H)}});
  }
  nlohmann::json j = {{"room", roomspec_to_json(spec)},
                      {"boundary", boundary_to_json(gt.map)},
                      {"corner_columns", gt.corner_cols},
                      {"corner_pixels", corner_pixels}};
  std::ofstream f(dir / (stem + ".json"));
  check(f.good(), ErrorCode::IoError, "cannot write dataset json");
  f << j.dump(2) << "\n";
}

inline DatasetSample load_dataset_sample(const std::filesystem::path& dir, int index) {
  const std::string stem = sample_stem(index);
  std::ifstream f(dir / (stem + ".json"));
  check(f.good(), ErrorCode::IoError,
        "missing dataset sample: " + (dir / (stem + ".json")).string());
  nlohmann::json j;
  f >> j;
  DatasetSample s;
  s.spec = roomspec_from_json(j.at("room"));
  s.gt = boundary_from_json(j.at("boundary"));
  s.corner_cols = j.at("corner_columns").get<std::vector<double>>();

  int W = 0, H = 0;
  const auto rgb = read_png_rgb8(dir / (stem + ".png"), W, H);
  s.image = Tensor<double>::zeros({3, H, W});
  const size_t plane = static_cast<size_t>(H) * W;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      for (int ch = 0; ch < 3; ++ch)
        s.image.data()[ch * plane + static_cast<size_t>(r) * W + c] =
            rgb[(static_cast<size_t>(r) * W + c) * 3 + ch] / 255.0;
  return s;
}

inline std::vector<DatasetSample> load_dataset(const std::filesystem::path& dir) {
  std::vector<DatasetSample> out;
  for (int i = 0;; ++i) {
    if (!std::filesystem::exists(dir / (sample_stem(i) + ".json"))) break;
    out.push_back(load_dataset_sample(dir, i));
  }
  check(!out.empty(), ErrorCode::EmptyDataset, "no samples found in " + dir.string());
  return out;
}

inline void generate_dataset(const std::filesystem::path& dir, const GenConfig& cfg,
                             int count, uint64_t seed, int W, int H) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    Rng idx(seed, "rooms");
    uint64_t room_seed = idx.next_u64() ^ (0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(i) + 1));
    const RoomSpec spec = sample_room(cfg, room_seed);
    const GtBoundaries gt = gt_boundaries(spec, W);
    const Tensor<double> img = render(spec, W, H, cfg.noise_sigma);
    save_dataset_sample(dir, i, img, spec, gt);
  }
}

}  // namespace omni
