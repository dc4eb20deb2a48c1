#pragma once

#include "mgl/empirical.hpp"
#include "mgl/net_builders.hpp"
#include "mgl/wasserstein.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mgl {

// Seed splitting: every random stream of an experiment is
// derive_seed(master, stream_id(<tag>), index); see rng.hpp.

struct RateSweepConfig {
  std::string manifold;
  std::string density = "uniform";
  std::vector<std::size_t> ns;
  std::size_t replicates = 10;
  std::size_t ref_multiplier = 16;
  std::uint64_t seed = 0;
  std::optional<double> noise_sigma;
  std::size_t w1_cap = kDefaultW1Cap;

  void validate() const;
};

struct RateRow {
  std::size_t n = 0;
  std::size_t replicate = 0;
  double w1 = 0;
  std::uint64_t seed = 0;
};

struct SlopeFit {
  double slope = 0;
  double stderr_slope = 0;
  double intercept = 0;  // log(mean w1) at n = 1
};

struct RateTable {
  std::vector<RateRow> rows;
  SlopeFit fit;
  std::size_t reference_size = 0;
  // Two independent draws at the largest n: the level at which W1(Q_n, Q_ref)
  // stops tracking W1(Q_n, Q).
  double reference_floor = 0;
  std::string resampling;
};

// OLS of log(mean w1 per n) on log n; needs >= 3 distinct n.
SlopeFit fit_slope(const std::vector<RateRow>& rows);

RateTable rate_sweep(const RateSweepConfig& cfg);

struct NoisyRow {
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double clean_noisy = 0;  // W1(Q_n, Qhat_n)
  double clean_ref = 0;    // W1(Q_n, Q_ref)
  double noisy_ref = 0;    // W1(Qhat_n, Q_ref)
};

struct NoisyReport {
  double sigma = 0;
  std::size_t ambient_dim = 0;
  double sqrt_v = 0;  // sqrt(D sigma^2)
  std::vector<NoisyRow> rows;
  double mean_clean_noisy = 0;
  bool mean_bound_holds = false;    // mean W1(Q_n, Qhat_n) <= sqrt_v
  bool every_ref_bound_holds = false;  // noisy_ref <= clean_ref + 2 sqrt_v, every row
  RateTable table;                  // noisy-vs-reference rows for CSV/plot output
};

// Isotropic Gaussian noise in the ambient space; cfg.noise_sigma required.
NoisyReport noisy_sweep(const RateSweepConfig& cfg);

std::string rate_table_csv(const RateTable& table);
std::string rate_table_svg(const RateTable& table, const std::string& title);
nlohmann::json rate_table_summary(const RateTable& table, const RateSweepConfig& cfg);
nlohmann::json to_json(const NoisyReport& report);

struct EndToEndConfig {
  std::string manifold;
  std::string density;
  double eps = 0.2;
  std::uint64_t seed = 0;
  std::size_t n_eval = 2048;
  std::size_t replicates = 5;
  double alpha = 1.0;  // Holder exponent assumed for the chart maps
  std::size_t max_width = 200000;
  std::size_t mc_samples = 1000000;
  std::size_t l1_samples = 20000;
};

struct MeanSe {
  double mean = 0;
  double se = 0;
  std::vector<double> values;
};

struct EndToEndReport {
  MeanSe generator;  // W1(g_theta # U, Q) at n_eval
  MeanSe control;    // W1(g* # U, Q)
  MeanSe floor;      // W1(Q, Q')
  McEstimate approximation;  // E |g_theta(X) - g*(X)|, X ~ U[0,1]^(d+1)
  double l1_bound = 0;       // D J (M delta1 + delta2 + delta3)
  NetworkMetrics metrics;
  bool within_eps = false;             // generator.mean <= eps + floor.mean
  bool control_matches_floor = false;  // |control - floor| <= 3 combined se
  bool bias_variance_holds = false;    // generator <= approximation + 2 floor (+ CI)
  nlohmann::json details;
};

// Oracle transport -> constructive chart networks -> assembled generator.
// d in {1, 2}; d = 2 is refused with a capacity error when the network would
// exceed max_width neurons per layer.
EndToEndReport end_to_end(const EndToEndConfig& cfg);

struct TransportCheckConfig {
  std::string manifold;
  std::string density;
  std::size_t n = 2048;
  std::uint64_t seed = 0;
  std::size_t mc_samples = 1000000;
  std::size_t w1_cap = kDefaultW1Cap;
};

// Pushforward of the oracle transport vs direct density samples, plus a
// control pair of direct samples for the statistical floor.
nlohmann::json transport_check(const TransportCheckConfig& cfg);

struct BuildApproxConfig {
  std::string func;  // sqrt | power:p | sin:k | abs:c | prod:d
  std::optional<double> alpha;
  double eps = 0.1;
  double M = 2.0;
  std::uint64_t seed = 0;
  std::size_t mc_samples = 100000;
};

// Named Holder test functions on [0,1]^d.
HolderFunction parse_holder_function(const std::string& spec);

struct BuildApproxResult {
  ReluNetwork net;
  nlohmann::json budget;  // eps, claimed bounds, measured metrics, measured error + CI
};

BuildApproxResult build_approx(const BuildApproxConfig& cfg);

struct StarshapeAuditConfig {
  std::string set;
  std::size_t n_pairs = 10000;
  std::size_t n_points = 10000;
  std::uint64_t seed = 0;
};

nlohmann::json starshape_audit(const StarshapeAuditConfig& cfg);

}  // namespace mgl
