#pragma once

#include "mgl/empirical.hpp"
#include "mgl/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mgl {

enum class ManifoldKind { kCircle, kSphere, kFlatTorus };

// Closed-form manifold with a canonical geodesic-ball atlas.
//
// Base embeddings: Circle(R) in R^2, Sphere(R) (d = 2) in R^3, FlatTorus(d, R)
// as a product of d circles of radius R in R^(2d). An optional isometric
// embedding x -> E x (E has orthonormal columns) places the base manifold in a
// larger ambient space; all geometry is computed in base coordinates.
class ChartedManifold {
 public:
  static ChartedManifold circle(double radius);
  static ChartedManifold sphere(double radius);
  static ChartedManifold flat_torus(std::size_t d, double radius);

  ManifoldKind kind() const noexcept { return kind_; }
  std::size_t intrinsic_dim() const noexcept { return d_; }
  std::size_t ambient_dim() const noexcept;
  std::size_t base_dim() const noexcept { return base_dim_; }
  double radius() const noexcept { return radius_; }
  double reach() const noexcept { return radius_; }
  // Bound M with ||x||_inf <= M on the manifold (the Euclidean norm bound).
  double bound() const noexcept;
  double chart_radius() const noexcept;
  double injectivity_radius() const noexcept;
  double volume() const noexcept;
  std::size_t chart_count() const noexcept { return centers_.size(); }
  Eigen::VectorXd chart_center(std::size_t j) const;
  bool is_embedded() const noexcept { return embedding_.size() > 0; }
  const Eigen::MatrixXd& embedding() const noexcept { return embedding_; }
  std::string spec() const;

  // exp_{c_j}(v), v in tangent coordinates of chart j (length d).
  Eigen::VectorXd exp_map(std::size_t j, std::span<const double> v) const;
  Eigen::VectorXd log_map(std::size_t j, const Eigen::VectorXd& x) const;
  double geodesic_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  // sqrt(det g) of the metric in normal coordinates at c_j.
  double volume_jacobian(std::size_t j, std::span<const double> v) const;

  bool in_chart(std::size_t j, const Eigen::VectorXd& x) const;
  // Number of chart balls containing x (K(x) of the overlap weighting).
  std::size_t multiplicity(const Eigen::VectorXd& x) const;
  double distance_to_manifold(const Eigen::VectorXd& x) const;

  Eigen::VectorXd to_base(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_base(const Eigen::VectorXd& b) const;
  // Uniform (volume-measure) sample in base coordinates.
  Eigen::VectorXd sample_uniform_base(Rng& rng) const;

  friend ChartedManifold ambient_embed(const ChartedManifold& m, std::size_t target_dim,
                                       std::uint64_t seed);

 private:
  ChartedManifold(ManifoldKind kind, std::size_t d, double radius);

  void require_on_manifold(const Eigen::VectorXd& b, const char* op) const;
  double base_distance_to_manifold(const Eigen::VectorXd& b) const;
  double base_geodesic(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  Eigen::VectorXd base_exp(std::size_t j, std::span<const double> v) const;
  Eigen::VectorXd base_log(std::size_t j, const Eigen::VectorXd& b) const;

  ManifoldKind kind_;
  std::size_t d_;
  std::size_t base_dim_;
  double radius_;
  // Circle / torus: per-axis centre angles; sphere: (axis, sign) encoded as angles[0], angles[1].
  std::vector<std::vector<double>> centers_;
  Eigen::MatrixXd embedding_;  // empty when not embedded
  std::uint64_t embed_seed_ = 0;
};

// Pads with zeros and applies a seeded random orthogonal matrix.
ChartedManifold ambient_embed(const ChartedManifold& m, std::size_t target_dim, std::uint64_t seed);

// Canonical cover: indices of every chart after a 10^5-sample coverage audit.
std::vector<std::size_t> geodesic_ball_cover(const ChartedManifold& m);

// `circle:R`, `sphere:R`, `torus:d:R`, optionally followed by `:embed:D:seed`
// (or `,embed:D:seed`).
ChartedManifold parse_manifold(const std::string& spec);

enum class DensityKind { kUniform, kCosine };

// Density w.r.t. the volume measure. kCosine: q(x) = (a + x_1/R) / (a Vol)
// where x_1 is the first base coordinate; requires a > 1.
class ManifoldDensity {
 public:
  static ManifoldDensity uniform(ChartedManifold m);
  static ManifoldDensity cosine(ChartedManifold m, double a);

  const ChartedManifold& manifold() const noexcept { return manifold_; }
  DensityKind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return a_; }
  double lower_bound() const noexcept { return lower_; }
  double upper_bound() const noexcept { return upper_; }
  std::string spec() const;

  double operator()(const Eigen::VectorXd& x) const;
  double evaluate_base(const Eigen::VectorXd& b) const;

 private:
  ManifoldDensity(ChartedManifold m, DensityKind kind, double a);

  ChartedManifold manifold_;
  DensityKind kind_;
  double a_ = 0;
  double lower_ = 0;
  double upper_ = 0;
};

// `uniform` or `cosine:a`.
ManifoldDensity parse_density(const ChartedManifold& m, const std::string& spec);

// Rejection sampling against the uniform measure with acceptance q / C.
EmpiricalMeasure sample_density(const ManifoldDensity& q, std::uint64_t seed, std::size_t n);

}  // namespace mgl
