#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mgl/error.hpp"
#include "mgl/experiments.hpp"
#include "mgl/rng.hpp"

#include <cmath>

using namespace mgl;

namespace {

std::vector<RateRow> synthetic(double c, double p, double noise, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RateRow> rows;
  for (std::size_t n : {100, 200, 400, 800, 1600, 3200})
    for (std::size_t r = 0; r < 10; ++r) {
      const double mult = noise > 0 ? std::exp(noise * standard_normal(rng)) : 1.0;
      rows.push_back({n, r, c * std::pow(static_cast<double>(n), p) * mult, 0});
    }
  return rows;
}

RateSweepConfig small_circle() {
  RateSweepConfig cfg;
  cfg.manifold = "circle:1";
  cfg.density = "cosine:2";
  cfg.ns = {32, 64, 128};
  cfg.replicates = 3;
  cfg.ref_multiplier = 4;
  cfg.seed = 9;
  return cfg;
}

}  // namespace

TEST_CASE("fit_slope recovers exact and noisy power laws") {
  const SlopeFit exact = fit_slope(synthetic(1.0, -0.5, 0, 0));
  CHECK(exact.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(exact.stderr_slope < 1e-12);
  CHECK(exact.intercept == doctest::Approx(0.0).epsilon(1e-12));
  const SlopeFit scaled = fit_slope(synthetic(3.0, -1.0 / 3, 0, 0));
  CHECK(scaled.slope == doctest::Approx(-1.0 / 3).epsilon(1e-12));
  CHECK(scaled.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) CHECK(std::abs(fit_slope(synthetic(2.0, -0.4, 0.05, seed)).slope + 0.4) < 0.02);
  std::vector<RateRow> single{{100, 0, 0.1, 0}, {100, 1, 0.2, 0}, {100, 2, 0.3, 0}};
  CHECK_THROWS_AS(fit_slope(single), Error);
  try {
    fit_slope(single);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFit);
  }
}

TEST_CASE("rate sweep config validation") {
  auto cfg = small_circle();
  cfg.ns = {64, 32, 128};
  CHECK_THROWS_AS(rate_sweep(cfg), Error);
  cfg = small_circle();
  cfg.replicates = 2;
  CHECK_THROWS_AS(rate_sweep(cfg), Error);
  cfg = small_circle();
  cfg.ns = {32, 64, 8192};
  try {
    rate_sweep(cfg);
    FAIL("expected a capacity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCapacity);
  }
}

TEST_CASE("rate sweep is deterministic and writes the documented CSV") {
  const auto cfg = small_circle();
  const RateTable a = rate_sweep(cfg), b = rate_sweep(cfg);
  const std::string csv = rate_table_csv(a);
  CHECK(csv == rate_table_csv(b));
  CHECK(csv.rfind("n,replicate,w1,seed\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(a.rows.size() == 9);
  CHECK(a.reference_size == 512);
  // 12 significant digits: the printed value parses back within 1e-11 relative.
  const auto line_end = csv.find('\n', 20);
  const std::string first = csv.substr(20, line_end - 20);
  const auto c1 = first.find(','), c2 = first.find(',', c1 + 1), c3 = first.find(',', c2 + 1);
  CHECK(std::stod(first.substr(c2 + 1, c3 - c2 - 1)) == doctest::Approx(a.rows[0].w1).epsilon(1e-11));
  CHECK(std::stoull(first.substr(c3 + 1)) == a.rows[0].seed);
  // Replicate seeds differ and follow the documented rule.
  CHECK(a.rows[0].seed == derive_seed(cfg.seed, stream_id("sample"), (32ull << 20) | 0));
  CHECK(a.rows[0].seed != a.rows[1].seed);
  const std::string svg = rate_table_svg(a, "test");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("slope") != std::string::npos);
  const auto summary = rate_table_summary(a, cfg);
  CHECK(summary["slope"].get<double>() == a.fit.slope);
  CHECK(summary["reference_floor"].get<double>() > 0);
}

TEST_CASE("ambient embedding leaves per-seed W1 unchanged") {
  auto cfg = small_circle();
  const RateTable a = rate_sweep(cfg);
  cfg.manifold = "circle:1:embed:8:3";
  const RateTable b = rate_sweep(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(std::abs(a.rows[i].w1 - b.rows[i].w1) < 1e-9);
}

TEST_CASE("noisy sweep bounds and the zero-noise case") {
  RateSweepConfig cfg;
  cfg.manifold = "sphere:1";
  cfg.ns = {64, 128, 256};
  cfg.replicates = 3;
  cfg.ref_multiplier = 4;
  cfg.seed = 4;
  cfg.noise_sigma = 0.0;
  const NoisyReport zero = noisy_sweep(cfg);
  for (const auto& r : zero.rows) {
    CHECK(r.clean_noisy == 0.0);
    CHECK(r.noisy_ref == doctest::Approx(r.clean_ref).epsilon(1e-12));
  }
  cfg.noise_sigma = 0.1;
  const NoisyReport rep = noisy_sweep(cfg);
  CHECK(rep.sqrt_v == doctest::Approx(std::sqrt(0.03)).epsilon(1e-12));
  CHECK(rep.mean_bound_holds);
  CHECK(rep.every_ref_bound_holds);
  // Jensen gap: E|xi| < sqrt(E|xi|^2).
  CHECK(rep.mean_clean_noisy < rep.sqrt_v);
  CHECK(rep.mean_clean_noisy > 0);
  CHECK(to_json(rep)["rows"].size() == 9);
  cfg.noise_sigma.reset();
  CHECK_THROWS_AS(noisy_sweep(cfg), Error);
}

TEST_CASE("end-to-end refuses unsupported dimensions") {
  EndToEndConfig cfg;
  cfg.manifold = "torus:3:1";
  cfg.density = "uniform";
  try {
    end_to_end(cfg);
    FAIL("expected a scope error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kScope);
  }
  cfg.manifold = "sphere:1";
  cfg.mc_samples = 100000;
  try {
    end_to_end(cfg);
    FAIL("expected a capacity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCapacity);
  }
  cfg.manifold = "circle:1";
  cfg.eps = 1.5;
  CHECK_THROWS_AS(end_to_end(cfg), Error);
}

TEST_CASE("end-to-end on the circle: bounds and depth growth under eps halving") {
  EndToEndConfig cfg;
  cfg.manifold = "circle:1";
  cfg.density = "cosine:2";
  cfg.seed = 2;
  cfg.n_eval = 512;
  cfg.replicates = 3;
  cfg.mc_samples = 300000;
  cfg.l1_samples = 4000;
  cfg.eps = 0.8;
  const EndToEndReport coarse = end_to_end(cfg);
  cfg.eps = 0.4;
  const EndToEndReport fine = end_to_end(cfg);
  for (const auto* r : {&coarse, &fine}) {
    CHECK(r->within_eps);
    CHECK(r->bias_variance_holds);
    CHECK(r->approximation.mean <= r->l1_bound);
  }
  CHECK(fine.l1_bound < coarse.l1_bound);
  double c = 0;
  for (const auto& net : fine.details["chart_networks"]) c = std::max(c, net["depth_constant"].get<double>());
  MESSAGE("depth " << coarse.metrics.depth << " -> " << fine.metrics.depth << ", chart constant " << c);
  CHECK(fine.metrics.depth >= coarse.metrics.depth);
  CHECK(static_cast<double>(fine.metrics.depth - coarse.metrics.depth) <= c + BudgetConstants::kTimesC + BudgetConstants::kIndicatorC);
}

TEST_CASE("transport check report") {
  TransportCheckConfig cfg;
  cfg.manifold = "circle:1";
  cfg.density = "cosine:2";
  cfg.n = 256;
  cfg.mc_samples = 200000;
  cfg.seed = 3;
  const auto rep = transport_check(cfg);
  CHECK(rep["charts"] == 3);
  CHECK(rep["thresholds"].size() == 4);
  CHECK(rep["thresholds"][3] == 1.0);
  std::size_t total = 0;
  for (auto c : rep["chart_occupancy"]) total += c.get<std::size_t>();
  CHECK(total == 256);
  CHECK(rep["w1_pushforward_vs_direct"].get<double>() < 0.2);
  CHECK(rep == transport_check(cfg));
  cfg.n = 5000;
  CHECK_THROWS_AS(transport_check(cfg), Error);
}

TEST_CASE("build-approx budget document") {
  BuildApproxConfig cfg;
  cfg.func = "sqrt";
  cfg.eps = 0.25;
  cfg.mc_samples = 20000;
  const auto res = build_approx(cfg);
  const auto& b = res.budget;
  CHECK(b["alpha"] == 0.5);
  CHECK(b["error"]["below_eps"] == true);
  CHECK(b["claims_satisfied"] == true);
  CHECK(b["ledger"]["depth_ok"] == true);
  CHECK(b["ledger"]["width_ok"] == true);
  CHECK(b["measured"]["depth"] == res.net.depth());
  cfg.func = "power:2";
  cfg.alpha = 0.5;
  CHECK(build_approx(cfg).budget["alpha"] == 0.5);
  cfg.func = "sqrt";
  cfg.alpha = 0.9;
  CHECK_THROWS_AS(build_approx(cfg), Error);
  CHECK_THROWS_AS(parse_holder_function("cosh:1"), Error);
  CHECK_THROWS_AS(parse_holder_function("sin:x"), Error);
  CHECK(parse_holder_function("prod:3").dim == 3);
  const double x[2] = {0.5, 0.25};
  CHECK(parse_holder_function("prod:2")(x) == 0.125);
}

TEST_CASE("starshape audit document") {
  StarshapeAuditConfig cfg;
  cfg.set = "random:16:5";
  cfg.n_pairs = 2000;
  cfg.n_points = 2000;
  const auto a = starshape_audit(cfg);
  CHECK(a["vertices"] == 16);
  CHECK(a["fixed_region_violations"] == 0);
  CHECK(a["inverse_images_outside_set"] == 0);
  CHECK(a["ray_monotonicity_violations"] == 0);
  CHECK(a["max_round_trip_forward"].get<double>() < 1e-8);
  CHECK(a["max_round_trip_inverse"].get<double>() < 1e-8);
  CHECK(a["max_boundary_to_sphere_error"].get<double>() < 1e-9);
  CHECK(a["lip_forward"].get<double>() * a["lip_inverse"].get<double>() >= 1.0);
  cfg.set = "ball:3:2";
  const auto b = starshape_audit(cfg);
  CHECK(b["lip_forward"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(b["lip_inverse"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
}
