#include <catch2/catch_amalgamated.hpp>

#include <thread>

#include "omni/grid.hpp"
#include "omni/rng.hpp"

using namespace omni;

namespace {

Tensor<double> random_image(int C, int H, int W, uint64_t seed) {
  Rng rng(seed, "img");
  auto t = Tensor<double>::zeros({C, H, W});
  for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(-1.0, 1.0);
  return t;
}

// scalar-loop bilinear oracle, wrap in u, clamp in v
double bilinear_oracle(const Tensor<double>& img, int ch, double u, double v) {
  const int H = img.dim(1), W = img.dim(2);
  const double vc = std::clamp(v, 0.0, static_cast<double>(H - 1));
  const int r0 = static_cast<int>(std::floor(vc));
  const int r1 = std::min(r0 + 1, H - 1);
  const double fv = vc - r0;
  const double uf = std::floor(u);
  int c0 = static_cast<int>(uf) % W;
  if (c0 < 0) c0 += W;
  const int c1 = (c0 + 1) % W;
  const double fu = u - uf;
  auto at = [&](int r, int c) {
    return img.data()[(static_cast<size_t>(ch) * H + r) * W + c];
  };
  return (1 - fv) * ((1 - fu) * at(r0, c0) + fu * at(r0, c1)) +
         fv * ((1 - fu) * at(r1, c0) + fu * at(r1, c1));
}

}  // namespace

TEST_CASE("equirect taps read Eq-6 at an equator row", "[grid]") {
  // odd height puts a row exactly on the equator
  const auto eq = build_grid(GridMode::Equirect, 3, 3, 63, 126);
  const auto pl = build_grid(GridMode::Planar, 3, 3, 63, 126);
  const int r = 31;  // lat0 = 0
  REQUIRE(lat_of_row(r, 63) == Catch::Approx(0.0).margin(1e-15));
  for (int t = 0; t < 9; ++t)
    REQUIRE(eq.tap(r, t).v_src == Catch::Approx(pl.tap(r, t).v_src).margin(1e-12));
  // middle-row taps see sec(0) = 1 and match planar exactly
  for (int kj = 0; kj < 3; ++kj)
    REQUIRE(eq.tap(r, 1, kj).du == Catch::Approx(pl.tap(r, 1, kj).du).margin(1e-12));
  // corner taps use the offset latitude, sec(lat0 +- dv)
  const double sec_dv = 1.0 / std::cos(kPi / 63);
  REQUIRE(eq.tap(r, 0, 2).du == Catch::Approx(sec_dv).margin(1e-12));
  REQUIRE(eq.tap(r, 2, 0).du == Catch::Approx(-sec_dv).margin(1e-12));
}

TEST_CASE("horizontal offset scales with sec of the tap latitude", "[grid]") {
  // H=9 puts rows at 90 - (r+0.5)*20 degrees: +60 at row 1, 0 at row 4, -60 at 7
  const auto g = build_grid(GridMode::Equirect, 3, 3, 9, 18);
  CHECK(g.tap(1, 1, 2).du == Catch::Approx(2.0).margin(1e-9));
  CHECK(g.tap(4, 1, 2).du == Catch::Approx(1.0).margin(1e-12));
  CHECK(g.tap(7, 1, 2).du == Catch::Approx(2.0).margin(1e-9));
  CHECK(g.tap(7, 1, 0).du == Catch::Approx(-2.0).margin(1e-9));
  // vertical offsets stay one pixel per tap index in equirect mode
  CHECK(g.tap(4, 0, 1).v_src == Catch::Approx(3.0).margin(1e-12));
  CHECK(g.tap(4, 2, 1).v_src == Catch::Approx(5.0).margin(1e-12));
}

TEST_CASE("equirect and gnomonic agree at the equator within 0.02 px", "[grid]") {
  const auto eq = build_grid(GridMode::Equirect, 3, 3, 64, 128);
  const auto gn = build_grid(GridMode::Gnomonic, 3, 3, 64, 128);
  for (int r : {31, 32}) {
    for (int t = 0; t < 9; ++t) {
      REQUIRE(std::abs(eq.tap(r, t).du - gn.tap(r, t).du) < 0.02);
      REQUIRE(std::abs(eq.tap(r, t).v_src - gn.tap(r, t).v_src) < 0.02);
    }
  }
}

TEST_CASE("grids deform near the poles", "[grid]") {
  const int H = 64, W = 128;
  const auto eq = build_grid(GridMode::Equirect, 3, 3, H, W);
  const auto pl = build_grid(GridMode::Planar, 3, 3, H, W);
  for (int r : {0, H - 1}) {
    const double ext_eq = std::max(std::abs(eq.tap(r, 1, 0).du), std::abs(eq.tap(r, 1, 2).du));
    const double ext_pl = std::max(std::abs(pl.tap(r, 1, 0).du), std::abs(pl.tap(r, 1, 2).du));
    const double lat = lat_of_row(r, H);
    REQUIRE(ext_eq / ext_pl >= 1.0 / std::cos(lat) - 1e-9);
    REQUIRE(ext_eq / ext_pl >= H / kPi);
  }
}

TEST_CASE("bilinear weights sum to one for all rows and modes", "[grid]") {
  for (GridMode m : {GridMode::Planar, GridMode::Equirect, GridMode::Gnomonic}) {
    for (auto [H, W, sh, sw] : {std::array<int, 4>{16, 32, 1, 1},
                                std::array<int, 4>{64, 128, 2, 2},
                                std::array<int, 4>{9, 20, 1, 2}}) {
      const auto g = build_grid(m, 3, 3, H, W, sh, sw);
      for (int r = 0; r < g.H_out; ++r)
        for (int t = 0; t < 9; ++t) {
          const auto& tap = g.tap(r, t);
          REQUIRE(tap.w00 >= 0.0);
          REQUIRE(tap.w01 >= 0.0);
          REQUIRE(tap.w10 >= 0.0);
          REQUIRE(tap.w11 >= 0.0);
          REQUIRE(tap.w00 + tap.w01 + tap.w10 + tap.w11 ==
                  Catch::Approx(1.0).margin(1e-12));
        }
    }
  }
}

TEST_CASE("tap coordinates are column-shift covariant", "[grid]") {
  const auto g = build_grid(GridMode::Equirect, 3, 3, 32, 64);
  for (int r : {0, 7, 30}) {
    for (int t = 0; t < 9; ++t) {
      for (int c : {0, 5, 63}) {
        REQUIRE(g.u_src(r, t, c) - g.u_src(r, t, 0) ==
                Catch::Approx(static_cast<double>(c)).margin(0.0));
      }
    }
  }
}

TEST_CASE("oversized kernels are rejected", "[grid]") {
  CHECK_THROWS_MATCHES(build_grid(GridMode::Equirect, 9, 3, 16, 64), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code == ErrorCode::KernelTooLarge;
                       }));
  // planar mode has no angular extent
  CHECK_NOTHROW(build_grid(GridMode::Planar, 9, 9, 16, 64));
  CHECK_THROWS_MATCHES(build_grid(GridMode::Planar, 3, 3, 2, 2), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code == ErrorCode::ShapeMismatch;
                       }));
}

TEST_CASE("sampling a constant image returns the constant in every mode", "[grid]") {
  const auto img = Tensor<double>::full({2, 16, 32}, 3.25);
  for (GridMode m : {GridMode::Planar, GridMode::Equirect, GridMode::Gnomonic}) {
    const auto g = build_grid(m, 3, 3, 16, 32);
    for (int r : {0, 8, 15})
      for (int c : {0, 17})
        for (int t = 0; t < 9; ++t) {
          const auto v = sample_values(img, g, r, c, t);
          REQUIRE(v[0] == Catch::Approx(3.25).margin(1e-12));
          REQUIRE(v[1] == Catch::Approx(3.25).margin(1e-12));
        }
  }
}

TEST_CASE("a tap on a pixel center returns that pixel exactly", "[grid]") {
  const auto img = random_image(1, 8, 16, 21);
  const auto g = build_grid(GridMode::Planar, 3, 3, 8, 16);
  const auto v = sample_values(img, g, 3, 5, 4);  // center tap
  CHECK(v[0] == img.data()[3 * 16 + 5]);
  const auto right = sample_values(img, g, 3, 5, 5);  // tap (0, +1)
  CHECK(right[0] == img.data()[3 * 16 + 6]);
}

TEST_CASE("sampling matches the scalar bilinear oracle", "[grid]") {
  const auto img = random_image(3, 8, 16, 22);
  Rng rng(23, "taps");
  for (GridMode m : {GridMode::Planar, GridMode::Equirect, GridMode::Gnomonic}) {
    const auto g = build_grid(m, 3, 3, 8, 16);
    for (int k = 0; k < 200; ++k) {
      const int r = static_cast<int>(rng.below(static_cast<uint64_t>(g.H_out)));
      const int c = static_cast<int>(rng.below(static_cast<uint64_t>(g.W_out)));
      const int t = static_cast<int>(rng.below(9));
      const auto v = sample_values(img, g, r, c, t);
      const auto& tap = g.tap(r, t);
      for (int ch = 0; ch < 3; ++ch) {
        const double expect = bilinear_oracle(img, ch, g.center_col(c) + tap.du, tap.v_src);
        REQUIRE(v[static_cast<size_t>(ch)] == Catch::Approx(expect).margin(1e-12));
      }
    }
  }
}

TEST_CASE("horizontal wrap blends the last and first columns", "[grid]") {
  const auto img = random_image(1, 4, 8, 9);
  // planar grid, output column W-1, tap (0, +1) reaches u = W which wraps to 0
  const auto g = build_grid(GridMode::Planar, 3, 3, 4, 8);
  const auto v = sample_values(img, g, 1, 7, 5);
  CHECK(v[0] == img.data()[1 * 8 + 0]);
}

TEST_CASE("azimuthal correlation of a one-hot pair", "[grid]") {
  const int H = 8, W = 16;
  auto f = Tensor<double>::zeros({H, W});
  const int r0 = 2, c0 = 5;
  f.data()[r0 * W + c0] = 1.0;
  const auto out = azimuthal_correlate(f, f);
  const double expect = std::cos(lat_of_row(r0, H)) * (kTwoPi / W) * (kPi / H);
  CHECK(out.data()[0] == Catch::Approx(expect).margin(1e-15));
  for (int k = 1; k < W; ++k) CHECK(out.data()[k] == 0.0);
}

TEST_CASE("azimuthal correlation shifts argmax with the signal", "[grid]") {
  const int H = 8, W = 16, s = 5;
  auto f = random_image(1, H, W, 4);
  f = Tensor<double>::from_data({H, W}, std::vector<double>(f.data(), f.data() + H * W));
  auto fs = Tensor<double>::zeros({H, W});
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      fs.data()[r * W + (c + s) % W] = f.data()[r * W + c];
  const auto base = azimuthal_correlate(f, f);
  const auto shifted = azimuthal_correlate(fs, f);
  auto argmax = [&](const Tensor<double>& t) {
    int best = 0;
    for (int k = 1; k < W; ++k)
      if (t.data()[k] > t.data()[best]) best = k;
    return best;
  };
  CHECK(argmax(base) == 0);
  CHECK(argmax(shifted) == s);
}

TEST_CASE("azimuthal correlation matches the triple-loop oracle", "[grid]") {
  const int H = 16, W = 32;
  auto f = random_image(1, H, W, 41);
  auto h = random_image(1, H, W, 42);
  const auto fv = Tensor<double>::from_data({H, W}, std::vector<double>(f.data(), f.data() + H * W));
  const auto hv = Tensor<double>::from_data({H, W}, std::vector<double>(h.data(), h.data() + H * W));
  const auto out = azimuthal_correlate(fv, hv);
  for (int k = 0; k < W; ++k) {
    double acc = 0.0;
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c)
        acc += hv.data()[r * W + ((c - k) % W + W) % W] * fv.data()[r * W + c] *
               std::cos(kHalfPi - (r + 0.5) * kPi / H) * (kTwoPi / W) * (kPi / H);
    REQUIRE(out.data()[k] == Catch::Approx(acc).margin(1e-12));
  }
}

TEST_CASE("grid cache shares one instance across threads", "[grid]") {
  auto& cache = GridCache::instance();
  const size_t before = cache.size();
  std::vector<std::shared_ptr<const SamplingGrid>> grids(8);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&, i] { grids[static_cast<size_t>(i)] = cache.get(GridMode::Equirect, 3, 3, 40, 80); });
  for (auto& t : threads) t.join();
  for (int i = 1; i < 8; ++i) REQUIRE(grids[static_cast<size_t>(i)] == grids[0]);
  CHECK(cache.size() == before + 1);
}
