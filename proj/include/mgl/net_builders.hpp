#pragma once

#include "mgl/relu_net.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mgl {

// Calibrated constants of the approximation budgets. The construction lemmas
// only state that such constants exist; these are the smallest integers that
// make every structural regression check pass over the builder sweeps in
// tests/test_net_builders.cpp, frozen here.
struct BudgetConstants {
  // times:    depth <= c * log2(A^2/eps) + c0
  static constexpr double kTimesC = 0.5, kTimesC0 = 3;
  // times_d:  depth <= c1 * log2(d^3 M^d / eps) + c2   (swept for d <= 16)
  static constexpr double kTimesDC1 = 2, kTimesDC2 = 10;
  // indicator: depth <= c * log_M(1/eps) + c0
  static constexpr double kIndicatorC = 1, kIndicatorC0 = 2;
  // cube indicator: depth <= c1 * log_b(d^2 4^d M^d / eps) + c2, b = min(M, 2)
  static constexpr double kCubeC1 = 2, kCubeC2 = 2;
  // piecewise net: depth <= c1 * log_b(d^2 4^d n^d M^(d+1) / eps) + c2, b = min(M, 2)
  static constexpr double kPiecewiseC1 = 2, kPiecewiseC2 = 2;
};

// Claimed budget next to the target accuracy. Bounds are evaluated numbers.
struct ApproxBudget {
  double epsilon = 0;
  double claimed_depth_bound = 0;
  double claimed_width_bound = 0;
  double claimed_weight_bound = 0;
  std::string depth_formula;
  std::string width_formula;

  bool satisfied_by(const NetworkMetrics& m) const;
};

struct BuiltNetwork {
  ReluNetwork net;
  ApproxBudget budget;
};

// f : [0,1]^d -> R with |f(x)-f(y)| <= holder_norm * |x-y|^alpha and |f| <= sup_bound.
struct HolderFunction {
  std::function<double(std::span<const double>)> evaluator;
  std::size_t dim = 1;
  double alpha = 1;
  double holder_norm = 1;
  double sup_bound = 1;

  double operator()(std::span<const double> x) const { return evaluator(x); }
};

// Open axis-aligned box prod_i (lower_i, upper_i).
struct Cube {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }
  double side() const { return upper.at(0) - lower.at(0); }
};

struct CubePartition {
  std::size_t n = 1;
  std::size_t d = 1;
  std::vector<Cube> cells;  // index = sum_i (k_i - 1) n^i, first axis fastest

  // Half-open lookup: cell containing x, with coordinates clamped to [0,1).
  std::size_t locate(std::span<const double> x) const;
};

struct PiecewiseConstant {
  CubePartition partition;
  std::vector<double> betas;
  double quadrature_error_estimate = 0;  // bound on max_k |beta_k - true mean_k|

  double operator()(std::span<const double> x) const;
};

// Two-input multiplication gadget: sup over |x|,|y| <= A of |out - xy| <= eps.
BuiltNetwork build_times(double A, double eps);

// d-ary product via a binary tree of multiplication gadgets.
BuiltNetwork build_times_d(std::size_t d, double M, double eps);

// Trapezoid approximation of 1_(a,b) with ramps of width eps.
BuiltNetwork build_indicator(double a, double b, double eps, double M);

BuiltNetwork build_cube_indicator(const Cube& cube, double eps, double M);

CubePartition uniform_cube_partition(std::size_t n, std::size_t d);

// Cell averages by tensor-grid midpoint quadrature, quad_points per axis per cell.
PiecewiseConstant piecewise_constant_approx(const HolderFunction& f, std::size_t n,
                                            std::size_t quad_points);

// Midpoint points per axis so that the quadrature error of every cell average is
// below 10% of the piecewise-constant L1 bound.
std::size_t recommended_quad_points(double alpha);

BuiltNetwork build_piecewise_net(const CubePartition& partition, std::span<const double> betas,
                                 double eps, double M);

struct HolderApproximation {
  BuiltNetwork built;
  std::size_t cells_per_axis = 0;
  PiecewiseConstant piecewise;
  double piecewise_bound = 0;  // holder_norm * d^(alpha/2) / n^alpha
};

// L1-approximation of a Holder function on [0,1]^d. M >= 2 and sup_bound < M.
HolderApproximation build_holder_approx(const HolderFunction& f, double eps, double M = 2.0);

// Holder-builder constants: depth <= c1 * log2(1/eps) (eps <= 1/2) and
// width <= c2 * eps^(-d/alpha). They depend on (d, alpha, holder_norm, M) but not eps.
double holder_depth_constant(const HolderFunction& f, double M);
double holder_width_constant(const HolderFunction& f);

struct GeneratorDeltas {
  double delta1 = 0;  // indicator accuracy
  double delta2 = 0;  // multiplication accuracy
  double delta3 = 0;  // per chart-net accuracy
};

// delta1 < eps/(3DJM), delta2 < eps/(3DJ), delta3 < eps/(3DJ).
GeneratorDeltas generator_deltas(double eps, std::size_t D, std::size_t J, double M);

struct AssembledGenerator {
  ReluNetwork net;
  double l1_bound = 0;  // D * J * (M delta1 + delta2 + delta3)
};

// g(x)_i = sum_j times(ind_{(pi_{j-1},pi_j)}(x_1), clamp_M(chart_nets[j][i](x_{2:d+1}))).
AssembledGenerator assemble_generator(const std::vector<std::vector<ReluNetwork>>& chart_nets,
                                      std::span<const double> thresholds, double delta1,
                                      double delta2, double delta3, std::size_t D, double M);

// Monte Carlo estimate with a 99% normal-approximation half width.
struct McEstimate {
  double mean = 0;
  double half_width = 0;
  std::size_t samples = 0;
};

// Stratified (one uniform point per equal-volume stratum along the first axis)
// Monte Carlo estimate of the L1 distance between `net` and `target` over the
// box [lo, hi]^d.
McEstimate l1_distance_mc(const ReluNetwork& net,
                          const std::function<double(std::span<const double>)>& target,
                          std::size_t d, double lo, double hi, std::size_t samples,
                          std::uint64_t seed);

// Max |net - target| over a uniform grid with `per_axis` points on [lo,hi]^d.
double sup_error_grid(const ReluNetwork& net,
                      const std::function<double(std::span<const double>)>& target, std::size_t d,
                      double lo, double hi, std::size_t per_axis);

}  // namespace mgl
