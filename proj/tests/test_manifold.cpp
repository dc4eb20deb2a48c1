#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mgl/error.hpp"
#include "mgl/manifold.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace mgl;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) out[i++] = e;
  return out;
}

std::vector<ChartedManifold> all_kinds() {
  return {ChartedManifold::circle(1.0), ChartedManifold::circle(2.5), ChartedManifold::sphere(1.0),
          ChartedManifold::sphere(0.7), ChartedManifold::flat_torus(2, 1.0), ChartedManifold::flat_torus(3, 1.0),
          ambient_embed(ChartedManifold::flat_torus(3, 1.0), 24, 5), ambient_embed(ChartedManifold::sphere(1.0), 7, 9)};
}

// Random tangent vector of norm below `limit`.
std::vector<double> random_tangent(std::mt19937_64& rng, std::size_t d, double limit) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(d);
  double n = 0;
  for (auto& e : v) {
    e = g(rng);
    n += e * e;
  }
  n = std::sqrt(n);
  const double r = limit * std::pow(u(rng), 1.0 / static_cast<double>(d));
  for (auto& e : v) e *= r / n;
  return v;
}

}  // namespace

TEST_CASE("exponential map worked examples") {
  auto c = ChartedManifold::circle(1.0);
  std::vector<double> quarter = {kPi / 2};
  CHECK((c.exp_map(0, quarter) - vec({0, 1})).norm() < 1e-15);
  auto s = ChartedManifold::sphere(1.0);
  // Chart 4 is the +z axis; its tangent frame is (x, y).
  CHECK((s.chart_center(4) - vec({0, 0, 1})).norm() == 0.0);
  std::vector<double> along_x = {kPi / 2, 0};
  CHECK((s.exp_map(4, along_x) - vec({1, 0, 0})).norm() < 1e-15);
  for (const auto& m : all_kinds()) {
    std::vector<double> zero(m.intrinsic_dim(), 0.0);
    for (std::size_t j = 0; j < m.chart_count(); ++j) CHECK((m.exp_map(j, zero) - m.chart_center(j)).norm() == 0.0);
  }
  std::vector<double> too_far = {kPi};
  CHECK_THROWS_AS(c.exp_map(0, too_far), Error);
}

TEST_CASE("log map worked examples") {
  auto c = ChartedManifold::circle(1.0);
  CHECK(c.log_map(0, vec({0, 1}))[0] == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(c.log_map(1, c.chart_center(1)).norm() == 0.0);
  CHECK_THROWS_AS(c.log_map(0, vec({-1, 0})), Error);
  CHECK_THROWS_AS(c.log_map(0, vec({2, 0})), Error);
}

TEST_CASE("exp/log round trip and log norm equals geodesic distance") {
  std::mt19937_64 rng(3);
  for (const auto& m : all_kinds()) {
    double worst = 0;
    for (int t = 0; t < 10000; ++t) {
      const std::size_t j = rng() % m.chart_count();
      auto v = random_tangent(rng, m.intrinsic_dim(), 0.999 * m.chart_radius());
      const VectorXd x = m.exp_map(j, v);
      CHECK(m.distance_to_manifold(x) < 1e-12);
      const VectorXd back = m.log_map(j, x);
      worst = std::max(worst, (m.exp_map(j, std::span<const double>(back.data(), back.size())) - x).norm());
      if (t % 50 == 0) CHECK(back.norm() == doctest::Approx(m.geodesic_distance(m.chart_center(j), x)).epsilon(1e-9));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("geodesic distance worked examples") {
  auto c = ChartedManifold::circle(1.0);
  CHECK(c.geodesic_distance(vec({1, 0}), vec({-1, 0})) == doctest::Approx(kPi));
  auto s = ChartedManifold::sphere(1.0);
  CHECK(s.geodesic_distance(vec({0, 0.6, 0.8}), vec({0, 0.6, 0.8})) == 0.0);
  auto t = ChartedManifold::flat_torus(2, 1.0);
  CHECK(t.geodesic_distance(vec({1, 0, 1, 0}), vec({0, 1, 0, 1})) == doctest::Approx(kPi / std::sqrt(2.0)));
  CHECK_THROWS_AS(c.geodesic_distance(vec({1, 0}), vec({0.5, 0})), Error);
}

TEST_CASE("metric properties on sampled triples") {
  for (const auto& m : all_kinds()) {
    Rng rng(11);
    for (int t = 0; t < 2000; ++t) {
      const VectorXd x = m.from_base(m.sample_uniform_base(rng));
      const VectorXd y = m.from_base(m.sample_uniform_base(rng));
      const VectorXd z = m.from_base(m.sample_uniform_base(rng));
      const double dxy = m.geodesic_distance(x, y), dyx = m.geodesic_distance(y, x);
      CHECK(std::abs(dxy - dyx) <= 1e-9);
      CHECK(m.geodesic_distance(x, z) <= dxy + m.geodesic_distance(y, z) + 1e-9);
      CHECK((x - y).norm() <= dxy + 1e-9);
    }
  }
}

TEST_CASE("volume jacobian") {
  auto c = ChartedManifold::circle(1.0);
  std::vector<double> v = {1.2};
  CHECK(c.volume_jacobian(0, v) == 1.0);
  auto s = ChartedManifold::sphere(1.0);
  std::vector<double> zero = {0, 0}, quarter = {0, kPi / 2};
  CHECK(s.volume_jacobian(0, zero) == 1.0);
  CHECK(s.volume_jacobian(0, quarter) == doctest::Approx(2 / kPi).epsilon(1e-12));
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    auto w = random_tangent(rng, 2, s.chart_radius());
    const double j = s.volume_jacobian(0, w);
    CHECK(j > 0);
    CHECK(j <= 1);
  }
}

TEST_CASE("canonical covers cover and have the documented overlaps") {
  for (const auto& m : all_kinds()) CHECK(geodesic_ball_cover(m).size() == m.chart_count());
  auto c = ChartedManifold::circle(1.0);
  CHECK(c.chart_count() == 3);
  CHECK(c.chart_center(1)[0] == doctest::Approx(std::cos(2 * kPi / 3)));
  Rng rng(2);
  for (int t = 0; t < 10000; ++t) {
    const VectorXd x = c.sample_uniform_base(rng);
    const auto k = c.multiplicity(x);
    CHECK((k == 1 || k == 2));
  }
  auto s = ChartedManifold::sphere(1.0);
  CHECK(s.chart_count() == 6);
  for (int t = 0; t < 10000; ++t) {
    const VectorXd x = s.sample_uniform_base(rng);
    // Away from the six axis points every point sees at least two balls.
    if (x.cwiseAbs().maxCoeff() < 0.99) CHECK(s.multiplicity(x) >= 2);
  }
  CHECK(ChartedManifold::flat_torus(2, 1.0).chart_count() == 9);
  CHECK(ChartedManifold::flat_torus(3, 1.0).chart_count() == 64);
}

TEST_CASE("ambient embedding is an isometry") {
  auto base = ChartedManifold::flat_torus(3, 1.0);
  auto big = ambient_embed(base, 24, 17);
  CHECK(big.intrinsic_dim() == 3);
  CHECK(big.ambient_dim() == 24);
  CHECK((big.embedding().transpose() * big.embedding() - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-12);
  Rng rng(4);
  for (int t = 0; t < 1000; ++t) {
    const VectorXd a = base.sample_uniform_base(rng), b = base.sample_uniform_base(rng);
    const VectorXd ea = big.from_base(a), eb = big.from_base(b);
    CHECK(std::abs((ea - eb).norm() - (a - b).norm()) < 1e-10);
    CHECK(std::abs(big.geodesic_distance(ea, eb) - base.geodesic_distance(a, b)) < 1e-10);
  }
  CHECK_THROWS_AS(ambient_embed(base, 5, 1), Error);
  auto twice = ambient_embed(big, 30, 2);
  CHECK(twice.ambient_dim() == 30);
  CHECK(twice.spec() == "torus:3:1:embed:30:2");
}

TEST_CASE("spec parsing") {
  CHECK(parse_manifold("circle:1").kind() == ManifoldKind::kCircle);
  CHECK(parse_manifold("sphere:2").radius() == 2.0);
  auto t = parse_manifold("torus:3:1,embed:24:7");
  CHECK(t.intrinsic_dim() == 3);
  CHECK(t.ambient_dim() == 24);
  CHECK(parse_manifold(t.spec()).embedding().isApprox(t.embedding()));
  CHECK_THROWS_AS(parse_manifold("klein:1"), Error);
  CHECK_THROWS_AS(parse_manifold("torus:3"), Error);
  CHECK_THROWS_AS(parse_manifold("circle:x"), Error);
  auto c = ChartedManifold::circle(1.0);
  CHECK(parse_density(c, "uniform").kind() == DensityKind::kUniform);
  CHECK(parse_density(c, "cosine:2").parameter() == 2.0);
  CHECK_THROWS_AS(parse_density(c, "cosine:0.5"), Error);
  CHECK_THROWS_AS(parse_density(c, "gauss"), Error);
}

TEST_CASE("density bounds and normalization") {
  for (const auto& m : all_kinds()) {
    auto q = ManifoldDensity::cosine(m, 2.0);
    Rng rng(6);
    double sum = 0, sum_sq = 0;
    const int n = 100000;
    for (int t = 0; t < n; ++t) {
      const VectorXd x = m.from_base(m.sample_uniform_base(rng));
      const double v = q(x);
      if (t < 10000) {
        CHECK(v >= q.lower_bound() - 1e-15);
        CHECK(v <= q.upper_bound() + 1e-15);
      }
      sum += v * m.volume();
      sum_sq += v * v * m.volume() * m.volume();
    }
    const double mean = sum / n, sd = std::sqrt(sum_sq / n - mean * mean);
    CHECK(std::abs(mean - 1.0) < 4 * sd / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("density sampling") {
  auto c = ChartedManifold::circle(1.0);
  auto uniform = sample_density(ManifoldDensity::uniform(c), 1, 4);
  CHECK(uniform.size() == 4);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(std::abs(uniform.points.row(i).norm() - 1.0) < 1e-12);
  auto q = ManifoldDensity::cosine(c, 2.0);
  auto s = sample_density(q, 7, 100000);
  // E[cos theta] = int cos(2 + cos) / (4 pi) = 1/4; Var[cos] = E[cos^2] - 1/16.
  const double mean = s.points.col(0).mean();
  const double second = s.points.col(0).array().square().mean();
  const double sigma = std::sqrt((second - mean * mean) / 1e5);
  CHECK(std::abs(mean - 0.25) < 3 * sigma);
  auto again = sample_density(q, 7, 100000);
  CHECK(again.points == s.points);
}
