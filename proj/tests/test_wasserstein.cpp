#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mgl/error.hpp"
#include "mgl/wasserstein.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

using namespace mgl;

namespace {

EmpiricalMeasure cloud(std::initializer_list<std::initializer_list<double>> rows) {
  EmpiricalMeasure m;
  m.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m.points(i, j++) = v;
    ++i;
  }
  return m;
}

EmpiricalMeasure random_cloud(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::uniform_real_distribution<double> u(-1, 1);
  EmpiricalMeasure m;
  m.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (auto& v : m.points.reshaped()) v = u(rng);
  return m;
}

// Minimum over all n! matchings of the mean matched distance.
double brute_force_w1(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0;
    for (std::size_t i = 0; i < perm.size(); ++i)
      s += (a.points.row(static_cast<Eigen::Index>(i)) - b.points.row(perm[i])).norm();
    best = std::min(best, s / static_cast<double>(perm.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("worked examples") {
  CHECK(w1_exact(cloud({{0, 0}}), cloud({{3, 4}})) == 5.0);
  CHECK(w1_exact(cloud({{0, 0}, {1, 0}}), cloud({{0, 1}, {1, 1}})) == doctest::Approx(1.0).epsilon(1e-15));
  auto a = cloud({{0.3, 0.1}, {2, -1}, {5, 5}});
  CHECK(w1_exact(a, a) == 0.0);
}

TEST_CASE("exact solver matches exhaustive search for n <= 6") {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + t % 6, dim = 1 + t % 3;
    auto a = random_cloud(rng, n, dim), b = random_cloud(rng, n, dim);
    const auto r = w1_exact_report(a, b);
    CHECK(std::abs(r.value - brute_force_w1(a, b)) <= 1e-9);
    CHECK(r.min_reduced_cost >= -1e-9);
  }
}

TEST_CASE("metric axioms on random small instances") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + t % 31;
    auto a = random_cloud(rng, n, 2), b = random_cloud(rng, n, 2), c = random_cloud(rng, n, 2);
    const double ab = w1_exact(a, b), ba = w1_exact(b, a), bc = w1_exact(b, c), ac = w1_exact(a, c);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab >= 0);
    CHECK(w1_exact(a, a) == 0.0);
    CHECK(ac <= ab + bc + 1e-9);
  }
}

TEST_CASE("tie-heavy instances stay optimal") {
  // Replicated and integer-grid points create many equal costs.
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> u(0, 3);
  for (int t = 0; t < 50; ++t) {
    EmpiricalMeasure a, b;
    a.points.resize(6, 2);
    b.points.resize(6, 2);
    for (auto& v : a.points.reshaped()) v = u(rng);
    for (auto& v : b.points.reshaped()) v = u(rng);
    CHECK(std::abs(w1_exact(a, b) - brute_force_w1(a, b)) <= 1e-9);
  }
  std::mt19937_64 rng2(10);
  auto base = random_cloud(rng2, 50, 3);
  EmpiricalMeasure doubled;
  doubled.points.resize(200, 3);
  for (int r = 0; r < 4; ++r) doubled.points.middleRows(50 * r, 50) = base.points;
  auto other = random_cloud(rng2, 200, 3);
  const auto report = w1_exact_report(doubled, other);
  CHECK(report.min_reduced_cost >= -1e-9);
  CHECK(std::abs(report.value - w1_exact(base, other)) <= 1e-9);
}

TEST_CASE("unequal sizes replicate or subsample") {
  auto a = cloud({{0.0}, {1.0}});
  auto b = cloud({{0.0}, {0.5}, {1.0}});
  const auto r = w1_exact_report(a, b);
  CHECK(r.matched_size == 6);
  CHECK(r.resampling == "replicated to lcm 6");
  // Exact 1-D value via quantile functions.
  std::vector<double> xs = {0, 1}, ys = {0, 0.5, 1};
  CHECK(r.value == doctest::Approx(w1_1d(xs, ys)).epsilon(1e-12));
  std::mt19937_64 rng(1);
  auto big = random_cloud(rng, 97, 2), small = random_cloud(rng, 89, 2);
  const auto sub = w1_exact_report(big, small, {.cap = 200, .seed = 3});
  CHECK(sub.matched_size == 89);
  CHECK(sub.resampling == "subsampled larger cloud to 89");
  CHECK(sub.value == w1_exact(big, small, {.cap = 200, .seed = 3}));
}

TEST_CASE("size cap is enforced") {
  std::mt19937_64 rng(2);
  auto a = random_cloud(rng, 20, 2), b = random_cloud(rng, 20, 2);
  CHECK_THROWS_AS(w1_exact(a, b, {.cap = 10}), Error);
  try {
    w1_exact(a, b, {.cap = 10});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCapacity);
    CHECK(std::string(e.what()).find("sliced_w1") != std::string::npos);
  }
}

TEST_CASE("one-dimensional formula") {
  std::vector<double> a = {0, 1}, b = {0.5, 1.5};
  CHECK(w1_1d(a, b) == 0.5);
  CHECK(w1_1d(a, a) == 0.0);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    auto x = random_cloud(rng, 64, 1), y = random_cloud(rng, 64, 1);
    std::span<const double> xs(x.points.data(), 64), ys(y.points.data(), 64);
    CHECK(std::abs(w1_1d(xs, ys) - w1_exact(x, y)) <= 1e-12);
  }
}

TEST_CASE("sliced estimator") {
  std::mt19937_64 rng(8);
  auto a = random_cloud(rng, 40, 3);
  CHECK(sliced_w1(a, a, 20, 1) == 0.0);
  for (int t = 0; t < 50; ++t) {
    auto x = random_cloud(rng, 30, 3), y = random_cloud(rng, 30, 3);
    // Every projection is 1-Lipschitz, so each slice is <= W1.
    CHECK(sliced_w1(x, y, 50, t) <= w1_exact(x, y) + 1e-12);
  }
  // Translation by v: each slice equals |<v,u>|; for u uniform on S^2 the mean is |v|/2.
  auto shifted = a;
  shifted.points.col(0).array() += 2.0;
  const double s = sliced_w1(a, shifted, 20000, 4);
  CHECK(s < 2.0);
  CHECK(s == doctest::Approx(1.0).epsilon(0.03));
  CHECK(sliced_w1(a, shifted, 100, 9) == sliced_w1(a, shifted, 100, 9));
}

TEST_CASE("orthogonal invariance of exact W1") {
  std::mt19937_64 rng(12);
  auto a = random_cloud(rng, 300, 4), b = random_cloud(rng, 300, 4);
  Eigen::MatrixXd g(4, 4);
  std::normal_distribution<double> n;
  for (auto& v : g.reshaped()) v = n(rng);
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  EmpiricalMeasure ra{a.points * q.transpose()}, rb{b.points * q.transpose()};
  CHECK(std::abs(w1_exact(a, b) - w1_exact(ra, rb)) <= 1e-9);
}

TEST_CASE("solver scales to the default cap") {
  std::mt19937_64 rng(13);
  auto a = random_cloud(rng, 2048, 3), b = random_cloud(rng, 2048, 3);
  const auto start = std::chrono::steady_clock::now();
  const auto r = w1_exact_report(a, b);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("n=2048 solve took " << secs << " s, W1=" << r.value);
  CHECK(r.min_reduced_cost >= -1e-9);
}
