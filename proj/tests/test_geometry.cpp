#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ckmloc/geometry.hpp"
#include "ckmloc/rng.hpp"

using namespace ckmloc;
using Catch::Approx;

namespace {

// Non-degenerate random triple: endpoints in well-separated boxes.
struct Triple {
  Point2 bs, ue, s;
};
Triple random_triple(Rng& rng) {
  Triple t;
  t.bs = rng.uniform_in({-5.0, 5.0, -5.0, 5.0});
  t.s = rng.uniform_in({10.0, 60.0, -50.0, 50.0});
  t.ue = rng.uniform_in({40.0, 90.0, -50.0, 50.0});
  return t;
}

} // namespace

TEST_CASE("forward_path on reference geometries") {
  SECTION("symmetric isoceles bounce") {
    const PathParam p = forward_path({0, 0}, {10, 0}, {5, 5});
    CHECK(p.aoa == Approx(kPi / 4).margin(1e-15));
    CHECK(p.toa == Approx(2.0 * std::sqrt(50.0) / kSpeedOfLight).epsilon(1e-15));
  }
  SECTION("collinear scatterer degenerates to the direct length") {
    const PathParam p = forward_path({0, 0}, {10, 0}, {5, 0});
    CHECK(p.aoa == Approx(0.0).margin(1e-15));
    CHECK(p.toa == Approx(10.0 / kSpeedOfLight).epsilon(1e-15));
  }
  SECTION("3-4-5 triangles") {
    const PathParam p = forward_path({0, 0}, {60, 0}, {30, 40});
    CHECK(p.aoa == Approx(std::atan2(40.0, 30.0)).margin(1e-15));
    CHECK(p.toa == Approx(100.0 / kSpeedOfLight).epsilon(1e-15));
  }
  SECTION("scatterer on the base station is rejected") {
    CHECK_THROWS_AS(forward_path({1, 2}, {10, 0}, {1, 2}), std::invalid_argument);
  }
  SECTION("delay respects the triangle inequality") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
      const Triple t = random_triple(rng);
      const PathParam p = forward_path(t.bs, t.ue, t.s);
      CHECK(kSpeedOfLight * p.toa >= distance(t.ue, t.bs) - 1e-9);
    }
  }
}

TEST_CASE("scatterer_from_path inverts forward_path") {
  SECTION("isoceles inverse") {
    const double toa = 2.0 * std::sqrt(50.0) / kSpeedOfLight;
    const Point2 s = scatterer_from_path({0, 0}, {10, 0}, kPi / 4, toa);
    CHECK(s.x == Approx(5.0).margin(1e-9));
    CHECK(s.y == Approx(5.0).margin(1e-9));
  }
  SECTION("collinear midpoint split") {
    const Point2 s = scatterer_from_path({0, 0}, {10, 0}, 0.0, 10.0 / kSpeedOfLight);
    CHECK(s.x == Approx(5.0).margin(1e-9));
    CHECK(s.y == Approx(0.0).margin(1e-12));
  }
  SECTION("roundtrip over random triples") {
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
      const Triple t = random_triple(rng);
      const PathParam p = forward_path(t.bs, t.ue, t.s);
      const Point2 rec = scatterer_from_path(t.bs, t.ue, p.aoa, p.toa);
      REQUIRE(distance(rec, t.s) < 1e-6);
    }
  }
  SECTION("recovered point satisfies both constraints") {
    Rng rng(43);
    for (int i = 0; i < 200; ++i) {
      const Triple t = random_triple(rng);
      const PathParam p = forward_path(t.bs, t.ue, t.s);
      const Point2 rec = scatterer_from_path(t.bs, t.ue, p.aoa, p.toa);
      const double range = kSpeedOfLight * p.toa;
      CHECK(distance(t.ue, rec) + distance(rec, t.bs) == Approx(range).epsilon(1e-9));
      // on the ray, at nonnegative distance
      const Point2 u = unit_vector(p.aoa);
      const double d = dot(rec - t.bs, u);
      CHECK(d >= 0.0);
      CHECK(distance(rec, t.bs + d * u) < 1e-9 * std::max(1.0, range));
    }
  }
  SECTION("infeasible delay is rejected") {
    CHECK_THROWS_AS(scatterer_from_path({0, 0}, {10, 0}, 0.3, 9.0 / kSpeedOfLight),
                    std::invalid_argument);
    CHECK_THROWS_AS(scatterer_from_path({0, 0}, {10, 0}, 0.3, 10.0 / kSpeedOfLight),
                    std::invalid_argument);
  }
  SECTION("near-singular denominator is rejected") {
    // Ray along the baseline with the delay only fractionally above it:
    // outside the collinear-boundary window but inside the singularity
    // guard.
    const double toa = (10.0 * (1.0 + 1e-11)) / kSpeedOfLight;
    CHECK_THROWS_AS(scatterer_from_path({0, 0}, {10, 0}, 0.0, toa), std::invalid_argument);
  }
  SECTION("exact collinear boundary uses the symmetric split") {
    const Point2 s = scatterer_from_path({2, 1}, {12, 1}, 0.0, 10.0 / kSpeedOfLight);
    CHECK(distance(s, {7, 1}) < 1e-9);
  }
}

TEST_CASE("ray_point") {
  CHECK(distance(ray_point(Ray({0, 0}, 0.0), 5.0), {5, 0}) < 1e-12);
  CHECK(distance(ray_point(Ray({0, 0}, kPi / 2), 3.0), {0, 3}) < 1e-12);
  CHECK(distance(ray_point(Ray({1, 1}, kPi / 4), std::sqrt(2.0)), {2, 2}) < 1e-12);
  CHECK_THROWS_AS(ray_point(Ray({0, 0}, 0.0), -0.1), std::invalid_argument);
  CHECK_THROWS_AS(Ray({0, 0}, Point2{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(kPi) == Approx(kPi));
  CHECK(wrap_angle(-kPi) == Approx(kPi));
  CHECK(wrap_angle(3 * kPi / 2) == Approx(-kPi / 2));
  CHECK(wrap_angle(0.25) == Approx(0.25));
}
