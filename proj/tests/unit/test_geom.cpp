#include <catch2/catch_amalgamated.hpp>

#include "omni/geom.hpp"
#include "omni/rng.hpp"

using namespace omni;

namespace {

// Independent inverse gnomonic via the tangent-frame rotation route: the
// plane point (x, y, 1) in the (east, north, radial) frame at the center,
// renormalized onto the sphere.
LatLon gnomonic_inverse_by_rotation(const LatLon& c, double x, double y) {
  const double sl = std::sin(c.lat), cl = std::cos(c.lat);
  const double so = std::sin(c.lon), co = std::cos(c.lon);
  const Vec3 east{co, 0.0, -so};
  const Vec3 north{-so * sl, cl, -co * sl};
  const Vec3 radial{so * cl, sl, co * cl};
  const Vec3 p{x * east.x + y * north.x + radial.x,
               x * east.y + y * north.y + radial.y,
               x * east.z + y * north.z + radial.z};
  return ray_to_latlon(p);
}

}  // namespace

TEST_CASE("pixel centers map to the declared angular convention", "[geom]") {
  const auto a = pixel_to_latlon(511.5, 255.5, 1024, 512);
  CHECK(a.lat == Catch::Approx(0.0).margin(1e-15));
  CHECK(a.lon == Catch::Approx(0.0).margin(1e-15));

  const auto corner = pixel_to_latlon(-0.5, -0.5, 1024, 512);
  CHECK(corner.lon == Catch::Approx(-kPi).margin(1e-15));
  CHECK(corner.lat == Catch::Approx(kHalfPi).margin(1e-15));

  const auto quarter = pixel_to_latlon(255.5, 127.5, 1024, 512);
  CHECK(quarter.lat == Catch::Approx(kPi / 4).margin(1e-15));
  CHECK(quarter.lon == Catch::Approx(-kHalfPi).margin(1e-15));
}

TEST_CASE("latlon_to_pixel inverts pixel_to_latlon", "[geom]") {
  const auto p = latlon_to_pixel({0.0, 0.0}, 1024, 512);
  CHECK(p.u == Catch::Approx(511.5).margin(1e-12));
  CHECK(p.v == Catch::Approx(255.5).margin(1e-12));

  Rng rng(7, "geom-roundtrip");
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-0.5, 1023.5);
    const double v = rng.uniform(-0.5, 511.5);
    const auto a = pixel_to_latlon(u, v, 1024, 512);
    const auto q = latlon_to_pixel(a, 1024, 512);
    REQUIRE(q.u == Catch::Approx(u).margin(1e-9));
    REQUIRE(q.v == Catch::Approx(v).margin(1e-9));
  }

  // wrap boundary: lon just below +pi lands near the last column
  const auto edge = latlon_to_pixel({0.0, kPi - 1e-9}, 1024, 512);
  CHECK(edge.u > 1023.0);
  CHECK(edge.u < 1023.5);
}

TEST_CASE("longitude normalization is idempotent and in range", "[geom]") {
  Rng rng(3, "lon-norm");
  for (int i = 0; i < 2000; ++i) {
    const double lon = rng.uniform(-50.0, 50.0);
    const double n1 = normalize_lon(lon);
    REQUIRE(n1 >= -kPi);
    REQUIRE(n1 < kPi);
    REQUIRE(normalize_lon(n1) == n1);
  }
}

TEST_CASE("floor boundary to distance", "[geom]") {
  CameraModel cam{1.6, 1024, 512};
  CHECK(floor_boundary_to_distance(-kPi / 4, cam) == Catch::Approx(1.6).margin(1e-12));
  CHECK(floor_boundary_to_distance(-std::atan(1.6 / 2.0), cam) ==
        Catch::Approx(2.0).margin(1e-12));
  // near-horizon clamps to the cap instead of blowing up
  CHECK(floor_boundary_to_distance(-1e-13, cam) == kMaxFloorDistance);
  CHECK_THROWS_AS(floor_boundary_to_distance(0.0, cam), Error);
  CHECK_THROWS_AS(floor_boundary_to_distance(0.2, cam), Error);

  // d -> -atan(h/d) -> d is the identity on (0, d_max]
  Rng rng(11, "floor-rt");
  for (int i = 0; i < 500; ++i) {
    const double d = std::exp(rng.uniform(std::log(0.01), std::log(1000.0)));
    const double lat_f = -std::atan(cam.height_m / d);
    REQUIRE(floor_boundary_to_distance(lat_f, cam) == Catch::Approx(d).epsilon(1e-9));
  }
}

TEST_CASE("ceiling height at column", "[geom]") {
  CameraModel cam{1.6, 1024, 512};
  CHECK(ceiling_height_at_column(kPi / 4, 1.6, cam) == Catch::Approx(3.2).margin(1e-12));
  CHECK(ceiling_height_at_column(std::atan(1.4 / 2.0), 2.0, cam) ==
        Catch::Approx(3.0).margin(1e-12));
  // symmetric room: lat_c = -lat_f implies h = 2 * camera height
  const double lat = std::atan(1.6 / 3.7);
  const double d = floor_boundary_to_distance(-lat, cam);
  CHECK(ceiling_height_at_column(lat, d, cam) == Catch::Approx(3.2).margin(1e-9));
  CHECK_THROWS_AS(ceiling_height_at_column(0.0, 1.0, cam), Error);
}

TEST_CASE("gnomonic inverse", "[geom]") {
  const auto id = gnomonic_inverse({0.0, 0.0}, 0.0, 0.0);
  CHECK(id.lat == 0.0);
  CHECK(id.lon == 0.0);

  // on the equator the gnomonic x axis runs along the great circle
  const auto eq = gnomonic_inverse({0.0, 0.0}, std::tan(deg2rad(5.0)), 0.0);
  CHECK(eq.lat == Catch::Approx(0.0).margin(1e-15));
  CHECK(eq.lon == Catch::Approx(deg2rad(5.0)).margin(1e-12));

  // dual independent implementations agree at mid-latitude
  Rng rng(5, "gnomonic");
  for (int i = 0; i < 500; ++i) {
    const LatLon c{rng.uniform(-1.2, 1.2), rng.uniform(-kPi, kPi)};
    const double x = rng.uniform(-0.2, 0.2);
    const double y = rng.uniform(-0.2, 0.2);
    const auto a = gnomonic_inverse(c, x, y);
    const auto b = gnomonic_inverse_by_rotation(c, x, y);
    REQUIRE(a.lat == Catch::Approx(b.lat).margin(1e-12));
    REQUIRE(normalize_lon(a.lon - b.lon) == Catch::Approx(0.0).margin(1e-12));
  }

  const auto mid = gnomonic_inverse({deg2rad(60.0), 0.0}, 0.01, 0.02);
  const auto mid2 = gnomonic_inverse_by_rotation({deg2rad(60.0), 0.0}, 0.01, 0.02);
  CHECK(mid.lat == Catch::Approx(mid2.lat).margin(1e-12));
  CHECK(mid.lon == Catch::Approx(mid2.lon).margin(1e-12));
}
