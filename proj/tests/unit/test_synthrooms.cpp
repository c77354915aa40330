#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "omni/synthrooms.hpp"

using namespace omni;

TEST_CASE("sample_room is deterministic and honors its invariants", "[synthrooms]") {
  GenConfig cfg;
  const RoomSpec a = sample_room(cfg, 42);
  const RoomSpec b = sample_room(cfg, 42);
  REQUIRE(a.footprint.size() == b.footprint.size());
  for (size_t i = 0; i < a.footprint.size(); ++i) {
    REQUIRE(a.footprint[i].x == b.footprint[i].x);
    REQUIRE(a.footprint[i].z == b.footprint[i].z);
  }
  REQUIRE(a.height_m == b.height_m);
  REQUIRE(a.camera.x == b.camera.x);

  for (uint64_t seed = 0; seed < 1000; ++seed) {
    const RoomSpec s = sample_room(cfg, seed);
    REQUIRE((s.footprint.size() == 4 || s.footprint.size() == 6));
    REQUIRE(is_rectilinear(s.footprint));
    REQUIRE(polygon_area_signed(s.footprint) > 0.0);  // CCW
    REQUIRE(s.height_m > s.camera_height);
    REQUIRE(point_in_polygon(s.footprint, s.camera));
    REQUIRE(min_clearance(s.footprint, s.camera) >= cfg.clearance - 1e-12);
  }
}

TEST_CASE("L-shape fraction is binomial around one half", "[synthrooms]") {
  GenConfig cfg;
  int l = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    if (sample_room(cfg, 100000 + static_cast<uint64_t>(i)).is_l_shape()) ++l;
  const double frac = static_cast<double>(l) / n;
  CHECK(frac > 0.47);
  CHECK(frac < 0.53);
}

namespace {
RoomSpec centered_square(double side, double height) {
  RoomSpec s;
  const double h = side / 2;
  s.footprint = {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
  make_ccw(s.footprint);
  s.height_m = height;
  s.camera = {0.0, 0.0};
  s.seed = 7;
  return s;
}
}  // namespace

TEST_CASE("gt boundaries of the centered square match the closed form", "[synthrooms]") {
  const RoomSpec s = centered_square(4.0, 3.0);
  const int W = 1024;
  const auto gt = gt_boundaries(s, W);

  // column closest to lon = 0 looks at a wall 2 m away (cos of the half-pixel
  // longitude accounted for)
  const int c0 = W / 2;  // lon = +pi/W, nearly 0
  const double lon = lon_of_col(c0, W);
  const double d = 2.0 / std::cos(lon);
  REQUIRE(gt.wall_dist[c0] == Catch::Approx(d).margin(1e-12));
  REQUIRE(gt.map.y_f[c0] == Catch::Approx(-std::atan(1.6 / d) / kHalfPi).margin(1e-12));
  REQUIRE(gt.map.y_c[c0] == Catch::Approx(std::atan(1.4 / d) / kHalfPi).margin(1e-12));
  // the quoted values at exactly lon = 0
  CHECK(-std::atan(1.6 / 2.0) / kHalfPi == Catch::Approx(-0.42956).margin(1e-5));
  CHECK(std::atan(1.4 / 2.0) / kHalfPi == Catch::Approx(0.38880).margin(1e-5));

  // exactly 4 corner columns at lon = +-pi/4, +-3pi/4
  REQUIRE(gt.corner_cols.size() == 4);
  std::vector<double> lons;
  for (double c : gt.corner_cols) lons.push_back(lon_of_col(c, W));
  std::sort(lons.begin(), lons.end());
  CHECK(lons[0] == Catch::Approx(-3 * kPi / 4).margin(1e-12));
  CHECK(lons[1] == Catch::Approx(-kPi / 4).margin(1e-12));
  CHECK(lons[2] == Catch::Approx(kPi / 4).margin(1e-12));
  CHECK(lons[3] == Catch::Approx(3 * kPi / 4).margin(1e-12));
}

TEST_CASE("boundaries invert through the floor/ceiling projections", "[synthrooms]") {
  GenConfig cfg;
  const CameraModel cam{1.6, 128, 64};
  for (uint64_t seed : {11ull, 12ull, 13ull, 14ull, 15ull}) {
    const RoomSpec s = sample_room(cfg, seed);
    const auto gt = gt_boundaries(s, 128);
    for (int c = 0; c < 128; ++c) {
      const double d = floor_boundary_to_distance(gt.map.lat_f(c), cam);
      REQUIRE(d == Catch::Approx(gt.wall_dist[c]).epsilon(1e-9));
      const double h = ceiling_height_at_column(gt.map.lat_c(c), d, cam);
      REQUIRE(h == Catch::Approx(s.height_m).epsilon(1e-9));
    }
    REQUIRE(std::all_of(gt.map.y_c.begin(), gt.map.y_c.end(),
                        [](double v) { return v > 0; }));
    REQUIRE(std::all_of(gt.map.y_f.begin(), gt.map.y_f.end(),
                        [](double v) { return v < 0; }));
  }
}

TEST_CASE("render classifies surfaces consistently with the boundaries", "[synthrooms]") {
  const RoomSpec s = sample_room(GenConfig{}, 99);
  const int W = 128, H = 64;
  std::vector<uint8_t> mask;
  const auto img = render_with_mask(s, W, H, &mask, 0.0);
  const auto gt = gt_boundaries(s, W);

  for (int c = 0; c < W; ++c) {
    // scan for label transitions; they must straddle the boundary latitude
    const double rc = row_of_lat(gt.map.lat_c(c), H);
    const double rf = row_of_lat(gt.map.lat_f(c), H);
    for (int r = 0; r + 1 < H; ++r) {
      const uint8_t a = mask[static_cast<size_t>(r) * W + c];
      const uint8_t b = mask[static_cast<size_t>(r + 1) * W + c];
      if (a == 0 && b == 1) {
        REQUIRE(rc > r - 0.5);
        REQUIRE(rc < r + 1.5);
      }
      if (a == 1 && b == 2) {
        REQUIRE(rf > r - 0.5);
        REQUIRE(rf < r + 1.5);
      }
      REQUIRE(b >= a);  // ceiling above wall above floor
    }
    // rows strictly above every ceiling boundary are ceiling
    REQUIRE(mask[c] == 0);
    REQUIRE(mask[static_cast<size_t>(H - 1) * W + c] == 2);
  }

  // same seed renders bit-identically
  const auto img2 = render(s, W, H, 0.02);
  const auto img3 = render(s, W, H, 0.02);
  REQUIRE(std::memcmp(img2.data(), img3.data(), sizeof(double) * img2.numel()) == 0);
}

TEST_CASE("pano_stretch identity and closed-form case", "[synthrooms]") {
  const RoomSpec s = centered_square(4.0, 3.0);
  const RoomLayout3D layout = layout_from_spec(s);
  const int W = 128, H = 64;
  const auto img = render(s, W, H, 0.0);

  auto [same, layout1] = pano_stretch(img, layout, {1.0, 1.0, 1.0});
  double max_diff = 0;
  for (int64_t i = 0; i < img.numel(); ++i)
    max_diff = std::max(max_diff, std::abs(same.data()[i] - img.data()[i]));
  CHECK(max_diff < 1e-9);
  REQUIRE(layout1.height == 3.0);

  // k = (2,1,2): distances double
  const auto layout2 = stretch_layout(layout, {2.0, 1.0, 2.0});
  const RayHit hit = raycast_boundary(layout2.footprint, {0, 0}, 0.0);
  REQUIRE(hit.t == Catch::Approx(4.0).margin(1e-12));
  CHECK(-std::atan(1.6 / hit.t) == Catch::Approx(-0.38051).margin(1e-5));
  // per-column agreement with the direct formula on the stretched square
  const auto gt2 = layout_boundaries(layout2, W);
  for (int c = 0; c < W; ++c) {
    const double lon = lon_of_col(c, W);
    const double d = 4.0 / std::max(std::abs(std::sin(lon)), std::abs(std::cos(lon)));
    REQUIRE(gt2.wall_dist[c] == Catch::Approx(d).margin(1e-9));
  }

  // Manhattan property and corner count survive stretching
  REQUIRE(is_rectilinear(layout2.footprint));
  REQUIRE(layout2.footprint.size() == layout.footprint.size());
}

TEST_CASE("stretch then inverse stretch restores the boundary map", "[synthrooms]") {
  GenConfig cfg;
  const int W = 128, H = 64;
  for (uint64_t seed : {21ull, 22ull, 23ull}) {
    const RoomSpec s = sample_room(cfg, seed);
    const RoomLayout3D layout = layout_from_spec(s);
    const auto img = render(s, W, H, 0.0);
    const StretchFactors k{1.7, 1.0, 0.6};
    auto [img1, l1] = pano_stretch(img, layout, k);
    auto [img2, l2] = pano_stretch(img1, l1, {1 / k.kx, 1 / k.ky, 1 / k.kz});

    const auto m0 = layout_boundaries(layout, W).map;
    const auto m2 = layout_boundaries(l2, W).map;
    for (int c = 0; c < W; ++c) {
      REQUIRE(m2.y_c[c] == Catch::Approx(m0.y_c[c]).margin(1e-6));
      REQUIRE(m2.y_f[c] == Catch::Approx(m0.y_f[c]).margin(1e-6));
    }
    // the image round trip is interpolative; just require bounded drift
    double mean = 0;
    for (int64_t i = 0; i < img.numel(); ++i)
      mean += std::abs(img2.data()[i] - img.data()[i]);
    mean /= static_cast<double>(img.numel());
    REQUIRE(mean < 0.08);
  }
}

TEST_CASE("boundary-map-only stretch stays near the exact route", "[synthrooms]") {
  const RoomSpec s = sample_room(GenConfig{}, 31);
  const int W = 256;
  const auto gt = gt_boundaries(s, W);
  const StretchFactors k{1.5, 1.0, 0.8};
  const auto approx = pano_stretch_map(gt.map, k);
  const auto exact = layout_boundaries(stretch_layout(layout_from_spec(s), k), W).map;
  double max_err = 0;
  for (int c = 0; c < W; ++c) {
    max_err = std::max(max_err, std::abs(approx.y_c[c] - exact.y_c[c]));
    max_err = std::max(max_err, std::abs(approx.y_f[c] - exact.y_f[c]));
  }
  CHECK(max_err < 0.02);  // interpolated route, loose tolerance

  CHECK_THROWS_AS(pano_stretch_map(gt.map, {0.0, 1.0, 1.0}), Error);
  const auto img = render(s, W, W / 2, 0.0);
  CHECK_THROWS_AS(pano_stretch(img, layout_from_spec(s), {1.0, -2.0, 1.0}), Error);
}

TEST_CASE("dataset round trip", "[synthrooms]") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "omni_ds_test";
  fs::remove_all(dir);
  GenConfig cfg;
  generate_dataset(dir, cfg, 3, 5, 64, 32);
  const auto ds = load_dataset(dir);
  REQUIRE(ds.size() == 3);
  for (const auto& s : ds) {
    REQUIRE(s.image.shape() == std::vector<int>{3, 32, 64});
    REQUIRE(s.gt.width == 64);
    REQUIRE(s.corner_cols.size() == s.spec.footprint.size());
    for (int64_t i = 0; i < s.image.numel(); ++i) {
      REQUIRE(s.image.data()[i] >= 0.0);
      REQUIRE(s.image.data()[i] <= 1.0);
    }
  }
  // regeneration is byte-identical
  const auto dir2 = fs::temp_directory_path() / "omni_ds_test2";
  fs::remove_all(dir2);
  generate_dataset(dir2, cfg, 3, 5, 64, 32);
  for (int i = 0; i < 3; ++i) {
    for (const char* ext : {".png", ".json"}) {
      std::ifstream a(dir / (sample_stem(i) + ext), std::ios::binary);
      std::ifstream b(dir2 / (sample_stem(i) + ext), std::ios::binary);
      const std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
      const std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
      REQUIRE(sa == sb);
      REQUIRE(!sa.empty());
    }
  }
}
