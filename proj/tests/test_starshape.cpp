#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mgl/error.hpp"
#include "mgl/starshape.hpp"

#include <cmath>
#include <numbers>

using namespace mgl;

namespace {

StarShapedSet unit_square() {
  return StarShapedSet::polygon({{1, 1}, {-1, 1}, {-1, -1}, {1, -1}});
}

// Closed-form radial function of the square [-1,1]^2.
double square_radial(double x, double y) { return std::hypot(x, y) / std::max(std::abs(x), std::abs(y)); }

Eigen::VectorXd vec(double x, double y) { return Eigen::Vector2d(x, y); }

}  // namespace

TEST_CASE("square polygon radial function and radii") {
  const auto s = unit_square();
  CHECK(s.eta() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.outer_radius() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(s.delta() == s.eta());
  for (int i = 0; i < 360; ++i) {
    const double t = 2 * std::numbers::pi * i / 360.0 + 0.001;
    CHECK(s.radial(vec(std::cos(t), std::sin(t))) == doctest::Approx(square_radial(std::cos(t), std::sin(t))).epsilon(1e-12));
  }
  // Vertex directions resolve to the vertex radius.
  CHECK(s.radial(vec(1, 1)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.contains(vec(0.99, -0.99)));
  CHECK_FALSE(s.contains(vec(1.01, 0)));
}

TEST_CASE("invalid polygons are rejected") {
  // Clockwise order.
  CHECK_THROWS_AS(StarShapedSet::polygon({{1, -1}, {-1, -1}, {-1, 1}, {1, 1}}), Error);
  // Origin outside: all vertices in the right half plane.
  CHECK_THROWS_AS(StarShapedSet::polygon({{1, -1}, {2, 0}, {1, 1}}), Error);
  CHECK_THROWS_AS(StarShapedSet::random_polygon(3, 1), Error);
}

TEST_CASE("ball: expansion is the identity and audit constants are 1") {
  const auto s = StarShapedSet::ball(3, 2.0);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd x = s.sample_uniform(rng);
    CHECK((expand_map(s, x) - x).norm() <= 1e-14);
    CHECK((expand_map_inverse(s, x) - x).norm() <= 1e-14);
  }
  const auto audit = bilipschitz_audit(s, 2000, 2);
  CHECK(audit.lip_forward == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(audit.lip_inverse == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("scaled ball with half kernel radius") {
  const auto s = StarShapedSet::ball(2, 3.0).with_eta(1.5);
  CHECK(s.delta() == 1.5);
  const auto audit = bilipschitz_audit(s, 2000, 3);
  CHECK(audit.lip_forward >= 1.0 - 1e-12);
  CHECK(std::isfinite(audit.lip_forward));
  CHECK(audit.lip_forward * audit.lip_inverse >= 1.0 - 1e-12);
  CHECK_THROWS_AS(StarShapedSet::ball(2, 3.0).with_eta(3.5), Error);
}

TEST_CASE("square: inner region fixed, boundary to sphere, explicit values") {
  const auto s = unit_square();
  const double L = std::sqrt(2.0);
  for (double x : {0.0, 0.2, -0.5}) {
    const Eigen::VectorXd p = vec(x, 0.1);
    if (p.norm() <= 0.5) CHECK(expand_map(s, p) == p);
  }
  CHECK(expand_map(s, vec(0.5, 0)) == vec(0.5, 0));
  // On the x-axis R = 1: F(t) = 1/2 + (L - 1/2)/(1/2) (t - 1/2).
  const double t = 0.8;
  CHECK(expand_map(s, vec(t, 0))[0] == doctest::Approx(0.5 + (L - 0.5) / 0.5 * (t - 0.5)).epsilon(1e-14));
  for (int i = 0; i <= 100; ++i) {
    const Eigen::VectorXd b = vec(1.0, -1.0 + 2.0 * i / 100.0);
    CHECK(std::abs(expand_map(s, b).norm() - L) <= 1e-9);
  }
  // Inverse of a sphere point lands on the square's boundary.
  for (int i = 0; i < 100; ++i) {
    const double a = 2 * std::numbers::pi * i / 100.0;
    const Eigen::VectorXd x = expand_map_inverse(s, vec(L * std::cos(a), L * std::sin(a)));
    CHECK(std::abs(std::max(std::abs(x[0]), std::abs(x[1])) - 1.0) <= 1e-8);
  }
  CHECK_THROWS_AS(expand_map(s, vec(1.1, 0)), Error);
  CHECK_THROWS_AS(expand_map_inverse(s, vec(L + 0.01, 0)), Error);
  try {
    expand_map(s, vec(0, 1.5));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDomain);
  }
}

TEST_CASE("random star polygons: round trips, rays, surjectivity") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto s = StarShapedSet::random_polygon(8 + 3 * seed, seed);
    const double L = s.outer_radius();
    Rng rng(100 + seed);
    double fwd = 0, back = 0;
    for (int i = 0; i < 10000; ++i) {
      const Eigen::VectorXd x = s.sample_uniform(rng);
      fwd = std::max(fwd, (expand_map_inverse(s, expand_map(s, x)) - x).norm());
      Eigen::VectorXd y(2);
      do {
        y << L * (2 * uniform01(rng) - 1), L * (2 * uniform01(rng) - 1);
      } while (y.norm() > L);
      const Eigen::VectorXd z = expand_map_inverse(s, y);
      CHECK(s.contains(z, 1e-8));
      back = std::max(back, (expand_map(s, z) - y).norm());
    }
    CHECK(fwd < 1e-8);
    CHECK(back < 1e-8);
    // Boundary points from vertex interpolation (independent of radial()).
    const auto& v = s.vertices();
    for (std::size_t i = 0; i < v.size(); ++i)
      for (double a : {0.0, 0.3, 0.77}) {
        const Eigen::VectorXd b = (1 - a) * v[i] + a * v[(i + 1) % v.size()];
        CHECK(std::abs(expand_map(s, b).norm() - L) <= 1e-9);
      }
    // Norm of F strictly increasing along rays.
    for (int k = 0; k < 20; ++k) {
      const double ang = 2 * std::numbers::pi * uniform01(rng);
      const Eigen::VectorXd u = vec(std::cos(ang), std::sin(ang));
      const double r = s.radial(u);
      double prev = -1;
      for (int j = 1; j <= 200; ++j) {
        const double n = expand_map(s, (r * j / 200.0) * u).norm();
        CHECK(n > prev);
        prev = n;
      }
    }
    // Fixed region is fixed bit-for-bit.
    for (int k = 0; k < 100; ++k) {
      const double ang = 2 * std::numbers::pi * uniform01(rng);
      const Eigen::VectorXd p = (s.eta() / 2 * uniform01(rng)) * vec(std::cos(ang), std::sin(ang));
      CHECK(expand_map(s, p) == p);
      CHECK(expand_map_inverse(s, p) == p);
    }
    const auto audit = bilipschitz_audit(s, 2000, seed);
    CHECK(std::isfinite(audit.lip_forward));
    CHECK(std::isfinite(audit.lip_inverse));
    CHECK(audit.lip_forward * audit.lip_inverse >= 1.0 - 1e-9);
  }
}

TEST_CASE("star set specs parse and round-trip") {
  const auto r = parse_star_set("random:12:7");
  CHECK(r.vertices().size() == 12);
  CHECK(parse_star_set(r.spec()).vertices() == r.vertices());
  const auto sq = parse_star_set("polygon:1,1;-1,1;-1,-1;1,-1");
  CHECK(sq.eta() == doctest::Approx(1.0));
  const auto p = parse_star_set(sq.spec());
  CHECK(p.vertices() == sq.vertices());
  const auto b = parse_star_set("ball:2:3:eta=1.5");
  CHECK(b.eta() == 1.5);
  CHECK(b.outer_radius() == 3.0);
  CHECK(parse_star_set(b.spec()).eta() == 1.5);
  CHECK_THROWS_AS(parse_star_set("hexagon:3"), Error);
  CHECK_THROWS_AS(parse_star_set("polygon:1,1;2"), Error);
  CHECK_THROWS_AS(parse_star_set("ball:2:x"), Error);
}
