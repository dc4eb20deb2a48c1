#pragma once

#include "mgl/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mgl {

// Compact set star-shaped about the origin, described by its radial function.
// Two representations: a ball B[0, L] in any dimension, or a polygon in R^2
// whose vertices are listed in increasing angular order around the origin.
class StarShapedSet {
 public:
  static StarShapedSet ball(std::size_t dim, double radius);
  // Vertices must wind once counter-clockwise around the origin with every
  // edge seen from the origin under a positive angle.
  static StarShapedSet polygon(std::vector<Eigen::Vector2d> vertices);
  // Sorted jittered angles, radii uniform in [r_min, r_max].
  static StarShapedSet random_polygon(std::size_t vertices, std::uint64_t seed, double r_min = 0.5,
                                      double r_max = 1.5);

  std::size_t dim() const noexcept { return dim_; }
  bool is_polygon() const noexcept { return !vertices_.empty(); }
  const std::vector<Eigen::Vector2d>& vertices() const noexcept { return vertices_; }
  double eta() const noexcept { return eta_; }
  double outer_radius() const noexcept { return outer_; }
  // Radius of the fixed inner region's parent ball; defaults to eta.
  double delta() const noexcept { return delta_; }
  StarShapedSet with_eta(double eta) const;
  StarShapedSet with_delta(double delta) const;

  // r(u) for a (not necessarily unit) nonzero direction u.
  double radial(const Eigen::VectorXd& u) const;
  // R(x) = r(x / |x|); returns outer_radius() at the origin by convention.
  double radial_at(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;
  Eigen::VectorXd sample_uniform(Rng& rng) const;
  std::string spec() const;

 private:
  StarShapedSet() = default;
  std::size_t dim_ = 2;
  std::vector<Eigen::Vector2d> vertices_;
  std::vector<double> angles_;
  double ball_radius_ = 0;
  double eta_ = 0;
  double outer_ = 0;
  double delta_ = 0;
  std::string spec_;
};

// "ball:D:L", "random:V:seed", or "polygon:x1,y1;x2,y2;..." with an optional
// trailing ":eta=<value>" override.
StarShapedSet parse_star_set(const std::string& spec);

Eigen::VectorXd expand_map(const StarShapedSet& s, const Eigen::VectorXd& x);
Eigen::VectorXd expand_map_inverse(const StarShapedSet& s, const Eigen::VectorXd& y);

struct BilipschitzAudit {
  double lip_forward = 0;
  double lip_inverse = 0;
  std::size_t pairs = 0;
};

// Empirical Lipschitz constants of F on S and of F^{-1} on B[0, L]. Half the
// pairs are independent draws, half are short-range perturbations.
BilipschitzAudit bilipschitz_audit(const StarShapedSet& s, std::size_t n_pairs, std::uint64_t seed);

}  // namespace mgl
