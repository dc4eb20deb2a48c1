#pragma once

#include "mgl/empirical.hpp"
#include "mgl/manifold.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mgl {

struct McValue {
  double mean = 0;
  double half_width = 0;  // 99% normal-approximation half-width
};

// Monte Carlo chart normalizers: Q(U_j) and eta_j = int_{U_j} q / K dmu,
// so that K_j = eta_j / Q(U_j).
struct ChartMasses {
  std::vector<McValue> chart_mass;  // Q(U_j)
  std::vector<McValue> eta;         // raw eta_j estimates
  std::size_t samples = 0;
};

ChartMasses estimate_chart_masses(const ManifoldDensity& q, std::uint64_t seed, std::size_t samples = 1000000);

// q~_j(v) = q(exp_{c_j} v) J(v) / (Q(U_j) K(exp v) K_j) on the tangent ball |v| < r.
class LocalTangentDensity {
 public:
  LocalTangentDensity(ManifoldDensity q, std::size_t chart, double chart_mass, double k_norm);

  std::size_t chart() const noexcept { return chart_; }
  std::size_t dim() const noexcept { return q_.manifold().intrinsic_dim(); }
  double support_radius() const noexcept { return q_.manifold().chart_radius(); }
  double chart_mass() const noexcept { return chart_mass_; }
  double k_norm() const noexcept { return k_norm_; }
  double eta() const noexcept { return chart_mass_ * k_norm_; }
  // C / eta_j, since J <= 1 and K >= 1.
  double upper_bound() const noexcept { return q_.upper_bound() / eta(); }

  double operator()(std::span<const double> v) const;

 private:
  ManifoldDensity q_;
  std::size_t chart_;
  double chart_mass_;
  double k_norm_;
};

LocalTangentDensity local_tangent_density(const ManifoldDensity& q, const ChartMasses& masses, std::size_t chart);

// Monotone quantile map of a positive density on (lo, hi): T = F^-1.
// F is tabulated with adaptive Gauss-Kronrod quadrature and interpolated by a
// monotone cubic Hermite spline with the density as knot derivative.
class QuantileMap {
 public:
  QuantileMap(const std::function<double(double)>& density, double lo, double hi, std::size_t knots = 4096);

  double lo() const noexcept { return knots_.front(); }
  double hi() const noexcept { return knots_.back(); }
  double total_mass() const noexcept { return total_; }
  double cdf(double t) const;
  double operator()(double u) const;
  const std::vector<double>& knots() const noexcept { return knots_; }

 private:
  double spline(std::size_t k, double t) const;

  std::vector<double> knots_;
  std::vector<double> cdf_;    // normalized CDF at knots
  std::vector<double> slope_;  // limited derivatives
  double total_ = 0;
};

// Knothe-Rosenblatt map of a density on the box [lo, hi]^2 from a histogram
// with resolution x resolution cells (each averaged over sub x sub points).
// Coordinate 1 uses the marginal of v1; coordinate 2 the conditional of v2
// given the v1 cell. Triangular, not optimal.
class TriangularMap {
 public:
  TriangularMap(const std::function<double(double, double)>& density, double lo, double hi,
                std::size_t resolution = 256, std::size_t sub = 4);

  std::size_t resolution() const noexcept { return n_; }
  Eigen::Vector2d operator()(double u1, double u2) const;
  // First coordinate alone (depends on u1 only by construction).
  double first(double u1) const;

 private:
  std::size_t column_of(double u1, double* local) const;

  std::size_t n_;
  double lo_, hi_, h_;
  std::vector<double> cells_;        // column-major: cells_[col * n + row]
  std::vector<double> column_cum_;   // cumulative column masses, size n+1
  std::vector<double> row_cum_;      // per column cumulative row masses, size n*(n+1)
};

// One chart's transport T_j: (0,1)^d -> tangent ball, and g*_j = exp o T_j.
class LocalTransport {
 public:
  LocalTransport(std::size_t chart, std::shared_ptr<const QuantileMap> map);
  LocalTransport(std::size_t chart, std::shared_ptr<const TriangularMap> map);

  std::size_t chart() const noexcept { return chart_; }
  std::size_t dim() const noexcept { return quantile_ ? 1 : 2; }
  std::string method() const { return quantile_ ? "quantile (monotone, optimal in 1-D)" : "triangular (non-optimal)"; }
  Eigen::VectorXd tangent(std::span<const double> u) const;

 private:
  std::size_t chart_;
  std::shared_ptr<const QuantileMap> quantile_;
  std::shared_ptr<const TriangularMap> triangular_;
};

LocalTransport quantile_transport_1d(const LocalTangentDensity& q, std::size_t knots = 4096);
LocalTransport triangular_transport(const LocalTangentDensity& q, std::size_t resolution = 256);

// g*(x) = sum_j 1_{(pi_{j-1}, pi_j]}(x_1) g*_j(x_{2:d+1}).
class GlobalTransport {
 public:
  GlobalTransport(ChartedManifold manifold, std::vector<LocalTransport> locals, std::vector<double> weights);

  const ChartedManifold& manifold() const noexcept { return manifold_; }
  std::size_t chart_count() const noexcept { return locals_.size(); }
  std::size_t source_dim() const noexcept { return manifold_.intrinsic_dim() + 1; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& thresholds() const noexcept { return thresholds_; }
  const LocalTransport& local(std::size_t j) const { return locals_.at(j); }

  // Chart selected by x_1; ties x_1 = pi_j go to the left interval.
  std::size_t select_chart(double x1) const;
  Eigen::VectorXd chart_map(std::size_t j, std::span<const double> u) const;
  Eigen::VectorXd operator()(std::span<const double> x) const;

 private:
  ChartedManifold manifold_;
  std::vector<LocalTransport> locals_;
  std::vector<double> weights_;
  std::vector<double> thresholds_;
};

GlobalTransport assemble_global_transport(const ChartedManifold& m, std::vector<LocalTransport> locals,
                                          std::vector<double> weights);

struct OracleTransport {
  ChartMasses masses;
  std::vector<LocalTangentDensity> densities;
  GlobalTransport transport;
};

// Full construction for d in {1, 2}: chart masses, local densities, local
// transports, renormalized weights and thresholds.
OracleTransport build_oracle_transport(const ManifoldDensity& q, std::uint64_t seed,
                                       std::size_t mc_samples = 1000000);

EmpiricalMeasure pushforward_sample(const GlobalTransport& g, std::uint64_t seed, std::size_t n);

// Rejection samples of a tangent density on its ball; rows are tangent vectors.
Eigen::MatrixXd sample_tangent_density(const LocalTangentDensity& q, std::uint64_t seed, std::size_t n);

struct TransportBoundCheck {
  double w1 = 0;
  double l1 = 0;
  double l1_half_width = 0;
  bool holds = false;
};

using PointMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Estimates W1(f#mu, g#mu) by exact matching and ||f - g||_{L1(mu)} by Monte
// Carlo on the same n source samples.
TransportBoundCheck l1_transport_bound_check(const PointMap& f, const PointMap& g,
                                             const std::function<Eigen::VectorXd(Rng&)>& source, std::size_t n,
                                             std::uint64_t seed);

}  // namespace mgl
