#include "mgl/net_builders.hpp"

#include "mgl/error.hpp"
#include "mgl/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mgl {

namespace {

using Triplet = Eigen::Triplet<double>;

Layer make_layer(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& t, Vec bias) {
  SparseMat w(rows, cols);
  w.setFromTriplets(t.begin(), t.end());
  w.prune(0.0, 0.0);
  w.makeCompressed();
  return Layer{std::move(w), std::move(bias)};
}

// Number of sawtooth stages so that A^2 * 2^(-2m-2) <= eps.
int times_stages(double A, double eps) {
  int m = 1;
  while (A * A * std::ldexp(1.0, -2 * m - 2) > eps) ++m;
  return m;
}

// Core multiplication gadget. With t+ = |x+y|/(2A), t- = |x-y|/(2A) and f_m the
// m-stage piecewise-linear interpolant of t^2, xy = A^2 (t+^2 - t-^2). The
// hidden units carry lambda * (quantity) so every hidden weight is in
// {1/2, 1} and every bias is at most lambda. Output = out_scale * (acc+ - acc-)
// where acc = lambda f_m(t); the true product estimate is (A^2/lambda)(acc+ - acc-).
ReluNetwork times_gadget(double A, int m, double lambda, double out_scale) {
  std::vector<Layer> layers;
  const double s = lambda / (2.0 * A);
  // Layer 1: |x+y| and |x-y| as ReLU pairs.
  {
    std::vector<Triplet> t = {{0, 0, s},  {0, 1, s},  {1, 0, -s}, {1, 1, -s},
                              {2, 0, s},  {2, 1, -s}, {3, 0, -s}, {3, 1, s}};
    layers.push_back(make_layer(4, 2, t, Vec::Zero(4)));
  }
  // Stage layers. Per sign block of 3 neurons: a = s(h), b = s(h - lambda 2^-(2s-1)),
  // c = s(acc), where h and acc are linear in the previous layer.
  for (int stage = 1; stage <= m; ++stage) {
    std::vector<Triplet> t;
    Vec bias = Vec::Zero(6);
    const double shift = lambda * std::ldexp(1.0, -(2 * stage - 1));
    for (int sign = 0; sign < 2; ++sign) {
      const int r = 3 * sign;
      if (stage == 1) {
        const int p = 2 * sign;  // h0 = acc0 = n_p + n_{p+1}
        for (int q : {p, p + 1}) {
          t.emplace_back(r + 0, q, 1.0);
          t.emplace_back(r + 1, q, 1.0);
          t.emplace_back(r + 2, q, 1.0);
        }
      } else {
        const int p = 3 * sign;  // previous (a, b, c)
        // h = a/2 - b
        t.emplace_back(r + 0, p + 0, 0.5);
        t.emplace_back(r + 0, p + 1, -1.0);
        t.emplace_back(r + 1, p + 0, 0.5);
        t.emplace_back(r + 1, p + 1, -1.0);
        // acc = c - h = c - a/2 + b
        t.emplace_back(r + 2, p + 2, 1.0);
        t.emplace_back(r + 2, p + 0, -0.5);
        t.emplace_back(r + 2, p + 1, 1.0);
      }
      bias[r + 1] = -shift;
    }
    layers.push_back(make_layer(6, stage == 1 ? 4 : 6, t, std::move(bias)));
  }
  // Output: out_scale * ((c - a/2 + b)_+ - (c - a/2 + b)_-).
  {
    std::vector<Triplet> t = {{0, 2, out_scale},        {0, 0, -0.5 * out_scale},
                              {0, 1, out_scale},        {0, 5, -out_scale},
                              {0, 3, 0.5 * out_scale},  {0, 4, -out_scale}};
    layers.push_back(make_layer(1, 6, t, Vec::Zero(1)));
  }
  return ReluNetwork(std::move(layers));
}

// Scalar network y -> factor * y with every per-layer multiplier <= bound.
// Realized as a pair of sign channels so it is exact for signed y.
ReluNetwork scaling_chain(double factor, double bound) {
  const int steps = std::max(1, static_cast<int>(std::ceil(std::log(factor) / std::log(bound) - 1e-12)));
  const double first = factor / std::pow(bound, steps - 1);
  std::vector<Layer> layers;
  layers.push_back(make_layer(2, 1, {{0, 0, first}, {1, 0, -first}}, Vec::Zero(2)));
  for (int i = 1; i < steps; ++i)
    layers.push_back(make_layer(2, 2, {{0, 0, bound}, {1, 1, bound}}, Vec::Zero(2)));
  layers.push_back(make_layer(1, 2, {{0, 0, 1.0}, {0, 1, -1.0}}, Vec::Zero(1)));
  return ReluNetwork(std::move(layers));
}

int ceil_log2(std::size_t d) {
  int k = 0;
  while ((std::size_t{1} << k) < d) ++k;
  return k;
}

// Number of M-bounded factors realizing 1/eps: ceil(log_M(1/eps)), at least 1.
int indicator_factors(double eps, double M) {
  const double v = std::log(1.0 / eps) / std::log(M);
  return std::max(1, static_cast<int>(std::ceil(v - 1e-12)));
}

struct TimesDPlan {
  int k = 0;
  double range = 1;  // gadgets are built for inputs in [-range, range]
  std::vector<int> stages;  // per level
  double delta = 0;
  double top_factor = 1;
};

// The tree runs on [-max(M,1), max(M,1)] so the constant-1 inputs that fill
// unused leaves stay inside every gadget's domain.
TimesDPlan plan_times_d(std::size_t d, double M, double eps) {
  TimesDPlan p;
  p.k = ceil_log2(d);
  p.range = std::max(M, 1.0);
  const double full = std::pow(2.0, p.k);
  p.delta = eps / (std::pow(4.0, p.k - 1) * std::pow(p.range, full - 2));
  for (int i = 1; i <= p.k; ++i) {
    const double Ai = std::pow(p.range, std::pow(2.0, i - 1));
    p.stages.push_back(times_stages(Ai, p.delta));
  }
  p.top_factor = std::pow(p.range, full);
  return p;
}

double log2_safe(double v) { return std::log2(std::max(v, 1.0)); }

// The ramps scale by at most M per layer and the product tree by at most 2,
// so the depth of indicator-based nets is logarithmic in base min(M, 2).
double log_ramp(double v, double M) { return std::log(std::max(v, 1.0)) / std::log(std::min(M, 2.0)); }

int indicator_depth(double eps, double M) { return indicator_factors(eps, M) + 1; }

int times_d_depth(std::size_t d, double M, double eps) {
  const auto p = plan_times_d(d, M, eps);
  int depth = 1;
  for (int m : p.stages) depth += m + 1;
  const double bound = 2.0 * p.range;
  if (p.top_factor > bound)
    depth += std::max(1, static_cast<int>(std::ceil(std::log(p.top_factor) / std::log(bound) - 1e-12)));
  return depth;
}

double cube_indicator_delta(std::size_t d, double eps, double M) {
  return eps / (4.0 * std::pow(3.0 * M, static_cast<double>(d) - 1.0));
}

double cube_indicator_eta(std::size_t d, double eps, double M) {
  return eps / (std::pow(2.0, static_cast<double>(d) + 1.0) * std::pow(M, static_cast<double>(d)));
}

int cube_indicator_depth(std::size_t d, double eps, double M) {
  const int ind = indicator_depth(cube_indicator_delta(d, eps, M), M);
  if (d == 1) return ind;
  return ind + times_d_depth(d, 1.0, cube_indicator_eta(d, eps, M)) - 1;
}

std::size_t holder_cells(const HolderFunction& f, double eps) {
  const double v = std::pow(2.0 * f.holder_norm / eps, 1.0 / f.alpha) * std::sqrt(static_cast<double>(f.dim));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(v - 1e-12)));
}

double piecewise_cell_eps(double eps, double M, std::size_t cells) {
  return eps / (M * static_cast<double>(cells));
}

int holder_depth(const HolderFunction& f, double eps, double M) {
  const std::size_t n = holder_cells(f, eps);
  const double cells = std::pow(static_cast<double>(n), static_cast<double>(f.dim));
  return cube_indicator_depth(f.dim, piecewise_cell_eps(eps / 2.0, M, static_cast<std::size_t>(cells)), M);
}

}  // namespace

bool ApproxBudget::satisfied_by(const NetworkMetrics& m) const {
  return static_cast<double>(m.depth) <= claimed_depth_bound &&
         static_cast<double>(m.width) <= claimed_width_bound &&
         m.weight_bound <= claimed_weight_bound * (1.0 + 1e-12);
}

BuiltNetwork build_times(double A, double eps) {
  require(A > 0, ErrorCode::kParameter, "build_times: A must be positive");
  require(eps > 0 && eps < A * A, ErrorCode::kParameter,
          fmt::format("build_times: need 0 < eps < A^2 (eps={}, A^2={})", eps, A * A));
  const int m = times_stages(A, eps);
  const double lambda = A;
  ReluNetwork net = times_gadget(A, m, lambda, A * A / lambda);
  ApproxBudget b;
  b.epsilon = eps;
  b.claimed_depth_bound = BudgetConstants::kTimesC * std::log2(A * A / eps) + BudgetConstants::kTimesC0;
  b.claimed_width_bound = 8;
  b.claimed_weight_bound = std::max(A, 1.0);
  b.depth_formula = "c*log2(A^2/eps)+c0";
  b.width_formula = "8";
  return {std::move(net), b};
}

BuiltNetwork build_times_d(std::size_t d, double M, double eps) {
  require(d >= 2, ErrorCode::kParameter, "build_times_d: d must be >= 2");
  require(M > 0, ErrorCode::kParameter, "build_times_d: M must be positive");
  require(eps > 0 && eps < M * M, ErrorCode::kParameter,
          fmt::format("build_times_d: need 0 < eps < M^2 (eps={}, M^2={})", eps, M * M));
  const TimesDPlan plan = plan_times_d(d, M, eps);
  const std::size_t full = std::size_t{1} << plan.k;

  // Level 1 gadgets read leaf pairs; level i+1 gadgets read level-i outputs.
  // Inner gadgets use lambda = 1 and emit A_i^2 * P so that the next level's
  // input normalization 1/(2 A_{i+1}) merges into a weight of 1/2.
  ReluNetwork tree = [&] {
    std::vector<ReluNetwork> leaves;
    const double A1 = plan.range;
    const bool top = plan.k == 1;
    for (std::size_t g = 0; g < full / 2; ++g)
      leaves.push_back(times_gadget(A1, plan.stages[0], 1.0, top ? 1.0 : A1 * A1));
    ReluNetwork level = parallel(leaves, false);
    for (int i = 2; i <= plan.k; ++i) {
      const double Ai = std::pow(plan.range, std::pow(2.0, i - 1));
      const bool is_top = i == plan.k;
      std::vector<ReluNetwork> gadgets;
      for (std::size_t g = 0; g < (full >> i); ++g)
        gadgets.push_back(times_gadget(Ai, plan.stages[static_cast<std::size_t>(i - 1)], 1.0,
                                       is_top ? 1.0 : Ai * Ai));
      level = compose(level, parallel(gadgets, false));
    }
    return level;
  }();
  const double bound = 2.0 * plan.range;
  if (plan.top_factor > bound) {
    tree = compose(tree, scaling_chain(plan.top_factor, bound));
  } else {
    tree = compose(tree, affine_net(Mat::Constant(1, 1, plan.top_factor), Vec::Zero(1)));
  }
  for (std::size_t i = full; i > d; --i) tree = bind_input(tree, i - 1, 1.0);
  tree = prune_constant_neurons(tree);

  ApproxBudget b;
  b.epsilon = eps;
  const double dd = static_cast<double>(d);
  b.claimed_depth_bound = BudgetConstants::kTimesDC1 * log2_safe(dd * dd * dd * std::pow(plan.range, dd) / eps) +
                          BudgetConstants::kTimesDC2;
  b.claimed_width_bound = 8.0 * dd;
  b.claimed_weight_bound = std::max(2.0 * M, 1.0);
  b.depth_formula = "c1*log2(d^3 max(M,1)^d/eps)+c2";
  b.width_formula = "8d";
  return {std::move(tree), b};
}

BuiltNetwork build_indicator(double a, double b, double eps, double M) {
  require(M > 1, ErrorCode::kParameter, "build_indicator: M must exceed 1");
  require(a < b && a >= -M && b <= M, ErrorCode::kParameter,
          fmt::format("build_indicator: need -M <= a < b <= M (a={}, b={}, M={})", a, b, M));
  require(eps > 0 && eps < (b - a) / 2, ErrorCode::kParameter,
          fmt::format("build_indicator: need 0 < eps < (b-a)/2 (eps={}, (b-a)/2={})", eps, (b - a) / 2));
  const int factors = indicator_factors(eps, M);
  const double R = (1.0 / eps) / std::pow(M, factors - 1);
  std::vector<Layer> layers;
  {
    Vec bias(4);
    bias << -(a - eps), -a, -b, -(b + eps);
    layers.push_back(make_layer(4, 1, {{0, 0, 1.0}, {1, 0, 1.0}, {2, 0, 1.0}, {3, 0, 1.0}}, bias));
  }
  layers.push_back(make_layer(1, 4, {{0, 0, R}, {0, 1, -R}, {0, 2, -R}, {0, 3, R}}, Vec::Zero(1)));
  for (int i = 1; i < factors; ++i) layers.push_back(make_layer(1, 1, {{0, 0, M}}, Vec::Zero(1)));
  ReluNetwork net(std::move(layers));

  ApproxBudget budget;
  budget.epsilon = eps;
  budget.claimed_depth_bound = BudgetConstants::kIndicatorC * std::max(0.0, std::log(1.0 / eps) / std::log(M)) +
                               BudgetConstants::kIndicatorC0;
  budget.claimed_width_bound = 4;
  budget.claimed_weight_bound = std::max({M, std::abs(a - eps), std::abs(b + eps)});
  budget.depth_formula = "c*log_M(1/eps)+c0";
  budget.width_formula = "4";
  return {std::move(net), budget};
}

BuiltNetwork build_cube_indicator(const Cube& cube, double eps, double M) {
  const std::size_t d = cube.dim();
  require(d >= 1 && cube.upper.size() == d, ErrorCode::kParameter, "build_cube_indicator: malformed cube");
  require(M > 1, ErrorCode::kParameter, "build_cube_indicator: M must exceed 1");
  const double side = cube.side();
  for (std::size_t i = 0; i < d; ++i) {
    require(std::abs((cube.upper[i] - cube.lower[i]) - side) <= 1e-12 * std::max(1.0, side),
            ErrorCode::kParameter, "build_cube_indicator: sides must be equal");
    require(cube.lower[i] >= -M && cube.upper[i] <= M, ErrorCode::kParameter,
            "build_cube_indicator: cube must lie in [-M,M]^d");
  }
  // Only the 1-D ramps need to fit inside the cube: delta < side/2.
  require(eps > 0 && eps < 1.0 && cube_indicator_delta(d, eps, M) < side / 2, ErrorCode::kParameter,
          fmt::format("build_cube_indicator: need 0 < eps < 1 and ramp width eps/(4(3M)^(d-1)) < side/2 "
                      "(eps={}, side={})", eps, side));
  const double delta = cube_indicator_delta(d, eps, M);
  std::vector<ReluNetwork> ramps;
  for (std::size_t i = 0; i < d; ++i)
    ramps.push_back(build_indicator(cube.lower[i], cube.upper[i], delta, M).net);
  ReluNetwork net = d == 1 ? ramps.front()
                           : compose(parallel(ramps, false),
                                     build_times_d(d, 1.0, cube_indicator_eta(d, eps, M)).net);
  ApproxBudget b;
  b.epsilon = eps;
  const double dd = static_cast<double>(d);
  b.claimed_depth_bound =
      BudgetConstants::kCubeC1 * log_ramp(dd * dd * std::pow(4.0, dd) * std::pow(M, dd) / eps, M) +
      BudgetConstants::kCubeC2;
  b.claimed_width_bound = 4.0 * dd;
  double edge = 0;
  for (std::size_t i = 0; i < d; ++i)
    edge = std::max({edge, std::abs(cube.lower[i] - delta), std::abs(cube.upper[i] + delta)});
  b.claimed_weight_bound = std::max({M, 2.0, edge});
  b.depth_formula = "c1*log_min(M,2)(d^2 4^d M^d/eps)+c2";
  b.width_formula = "4d";
  return {std::move(net), b};
}

CubePartition uniform_cube_partition(std::size_t n, std::size_t d) {
  require(n >= 1 && d >= 1, ErrorCode::kParameter, "uniform_cube_partition: n and d must be positive");
  CubePartition p;
  p.n = n;
  p.d = d;
  const double total = std::pow(static_cast<double>(n), static_cast<double>(d));
  require(total <= 5e7, ErrorCode::kCapacity, "uniform_cube_partition: too many cells");
  const auto count = static_cast<std::size_t>(total);
  p.cells.reserve(count);
  std::vector<std::size_t> k(d, 0);
  for (std::size_t c = 0; c < count; ++c) {
    Cube cube;
    cube.lower.resize(d);
    cube.upper.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      cube.lower[i] = static_cast<double>(k[i]) / static_cast<double>(n);
      cube.upper[i] = static_cast<double>(k[i] + 1) / static_cast<double>(n);
    }
    p.cells.push_back(std::move(cube));
    for (std::size_t i = 0; i < d; ++i) {
      if (++k[i] < n) break;
      k[i] = 0;
    }
  }
  return p;
}

std::size_t CubePartition::locate(std::span<const double> x) const {
  std::size_t index = 0, stride = 1;
  for (std::size_t i = 0; i < d; ++i) {
    auto k = static_cast<long long>(std::floor(x[i] * static_cast<double>(n)));
    k = std::clamp<long long>(k, 0, static_cast<long long>(n) - 1);
    index += static_cast<std::size_t>(k) * stride;
    stride *= n;
  }
  return index;
}

double PiecewiseConstant::operator()(std::span<const double> x) const {
  return betas[partition.locate(x)];
}

std::size_t recommended_quad_points(double alpha) {
  require(alpha > 0 && alpha <= 1, ErrorCode::kParameter, "recommended_quad_points: alpha in (0,1]");
  // Per-cell midpoint error <= |f|_a (sqrt(d)/(2 n q))^a, which is below 10% of
  // |f|_a d^(a/2) / n^a once (1/(2q))^a <= 0.1.
  return static_cast<std::size_t>(std::ceil(0.5 * std::pow(10.0, 1.0 / alpha) - 1e-12));
}

PiecewiseConstant piecewise_constant_approx(const HolderFunction& f, std::size_t n,
                                            std::size_t quad_points) {
  require(quad_points >= 1, ErrorCode::kParameter, "piecewise_constant_approx: quad_points must be positive");
  PiecewiseConstant pc;
  pc.partition = uniform_cube_partition(n, f.dim);
  const std::size_t d = f.dim;
  const double h = 1.0 / static_cast<double>(n);
  const double sub = h / static_cast<double>(quad_points);
  const auto per_cell = static_cast<std::size_t>(std::pow(static_cast<double>(quad_points), static_cast<double>(d)));
  pc.betas.reserve(pc.partition.cells.size());
  std::vector<double> x(d);
  std::vector<std::size_t> q(d);
  for (const auto& cell : pc.partition.cells) {
    double sum = 0;
    std::fill(q.begin(), q.end(), 0);
    for (std::size_t s = 0; s < per_cell; ++s) {
      for (std::size_t i = 0; i < d; ++i) x[i] = cell.lower[i] + (static_cast<double>(q[i]) + 0.5) * sub;
      sum += f(x);
      for (std::size_t i = 0; i < d; ++i) {
        if (++q[i] < quad_points) break;
        q[i] = 0;
      }
    }
    pc.betas.push_back(sum / static_cast<double>(per_cell));
  }
  pc.quadrature_error_estimate =
      f.holder_norm * std::pow(std::sqrt(static_cast<double>(d)) * sub / 2.0, f.alpha);
  return pc;
}

BuiltNetwork build_piecewise_net(const CubePartition& partition, std::span<const double> betas,
                                 double eps, double M) {
  const std::size_t cells = partition.cells.size();
  require(betas.size() == cells, ErrorCode::kParameter, "build_piecewise_net: one coefficient per cell");
  require(M > 1, ErrorCode::kParameter, "build_piecewise_net: M must exceed 1");
  for (double beta : betas)
    require(std::abs(beta) <= M, ErrorCode::kParameter,
            fmt::format("build_piecewise_net: coefficient {} exceeds M={}", beta, M));
  const double cell_eps = piecewise_cell_eps(eps, M, cells);
  const double side = 1.0 / static_cast<double>(partition.n);
  require(eps > 0 && cell_eps < std::min(side / 2, 1.0), ErrorCode::kParameter,
          fmt::format("build_piecewise_net: per-cell error eps/(M n^d)={} must be below 1/(2n)={}",
                      cell_eps, side / 2));
  const std::size_t d = partition.d;

  std::vector<ReluNetwork> phis;
  std::vector<double> used;
  for (std::size_t k = 0; k < cells; ++k) {
    if (betas[k] == 0.0) continue;
    phis.push_back(build_cube_indicator(partition.cells[k], cell_eps, M).net);
    used.push_back(betas[k]);
  }
  ReluNetwork net = [&] {
    if (phis.empty()) return affine_net(Mat::Zero(1, static_cast<Eigen::Index>(d)), Vec::Zero(1));
    Mat combine(1, static_cast<Eigen::Index>(used.size()));
    for (std::size_t k = 0; k < used.size(); ++k) combine(0, static_cast<Eigen::Index>(k)) = used[k];
    return compose(parallel(phis, true), affine_net(combine, Vec::Zero(1)));
  }();

  ApproxBudget b;
  b.epsilon = eps;
  const double dd = static_cast<double>(d);
  const double nd = static_cast<double>(cells);
  b.claimed_depth_bound =
      BudgetConstants::kPiecewiseC1 *
          log_ramp(dd * dd * std::pow(4.0, dd) * nd * std::pow(M, dd + 1.0) / eps, M) +
      BudgetConstants::kPiecewiseC2;
  b.claimed_width_bound = 4.0 * dd * nd;
  b.claimed_weight_bound = std::max({M, 2.0, 1.0 + cell_eps});
  b.depth_formula = "c1*log_min(M,2)(d^2 4^d n^d M^(d+1)/eps)+c2";
  b.width_formula = "4 d n^d";
  return {std::move(net), b};
}

double holder_depth_constant(const HolderFunction& f, double M) {
  // sup over eps in (0, 1/2] of depth(eps)/log2(1/eps); depth grows like
  // (1 + d/alpha) log2(1/eps) so the sup is attained at moderate eps.
  double c = 0;
  for (int i = 0; i <= 480; ++i) {
    const double eps = 0.5 * std::pow(10.0, -i / 40.0);
    c = std::max(c, holder_depth(f, eps, M) / std::log2(1.0 / eps));
  }
  return std::ceil(c);
}

double holder_width_constant(const HolderFunction& f) {
  const double d = static_cast<double>(f.dim);
  const double scale = std::pow(2.0 * std::sqrt(d), d) * std::pow(2.0 * f.holder_norm, d / f.alpha);
  return 4.0 * d * std::max(1.0, scale);
}

HolderApproximation build_holder_approx(const HolderFunction& f, double eps, double M) {
  require(eps > 0 && eps < 1, ErrorCode::kParameter,
          fmt::format("build_holder_approx: need 0 < eps < 1 (eps={})", eps));
  require(M >= 2 && f.sup_bound < M, ErrorCode::kParameter,
          fmt::format("build_holder_approx: need M >= 2 and sup_bound < M (sup={}, M={})", f.sup_bound, M));
  require(f.alpha > 0 && f.alpha <= 1 && f.dim >= 1 && f.holder_norm >= 0, ErrorCode::kParameter,
          "build_holder_approx: malformed Holder function");
  const std::size_t n = holder_cells(f, eps);
  PiecewiseConstant piecewise = piecewise_constant_approx(f, n, recommended_quad_points(f.alpha));
  const double piecewise_bound = f.holder_norm * std::pow(static_cast<double>(f.dim), f.alpha / 2) /
                                 std::pow(static_cast<double>(n), f.alpha);
  auto pw = build_piecewise_net(piecewise.partition, piecewise.betas, eps / 2, M);
  ApproxBudget b;
  b.epsilon = eps;
  b.claimed_depth_bound = holder_depth_constant(f, M) * std::log2(1.0 / eps);
  b.claimed_width_bound = holder_width_constant(f) * std::pow(eps, -static_cast<double>(f.dim) / f.alpha);
  b.claimed_weight_bound = pw.budget.claimed_weight_bound;
  b.depth_formula = "c1*log2(1/eps)";
  b.width_formula = "c2*eps^(-d/alpha)";
  return HolderApproximation{BuiltNetwork{std::move(pw.net), b}, n, std::move(piecewise), piecewise_bound};
}

GeneratorDeltas generator_deltas(double eps, std::size_t D, std::size_t J, double M) {
  const double base = eps / (3.0 * static_cast<double>(D) * static_cast<double>(J));
  constexpr double kStrict = 0.99;
  return {kStrict * base / M, kStrict * base, kStrict * base};
}

AssembledGenerator assemble_generator(const std::vector<std::vector<ReluNetwork>>& chart_nets,
                                      std::span<const double> thresholds, double delta1,
                                      double delta2, double delta3, std::size_t D, double M) {
  const std::size_t J = chart_nets.size();
  require(J >= 1, ErrorCode::kParameter, "assemble_generator: need at least one chart");
  require(thresholds.size() == J + 1, ErrorCode::kParameter,
          "assemble_generator: need J+1 thresholds");
  require(thresholds.front() == 0.0 && thresholds.back() == 1.0, ErrorCode::kParameter,
          "assemble_generator: thresholds must span (0,1)");
  for (std::size_t j = 0; j < J; ++j)
    require(thresholds[j] < thresholds[j + 1], ErrorCode::kParameter,
            "assemble_generator: thresholds must be strictly increasing");
  require(M > 1, ErrorCode::kParameter, "assemble_generator: M must exceed 1");
  const std::size_t d = chart_nets.front().front().input_dim();
  for (const auto& row : chart_nets) {
    require(row.size() == D, ErrorCode::kParameter, "assemble_generator: need D chart nets per chart");
    for (const auto& net : row)
      require(net.input_dim() == d && net.output_dim() == 1, ErrorCode::kShape,
              "assemble_generator: chart nets must map R^d -> R");
  }
  const auto in = static_cast<Eigen::Index>(d + 1);

  Mat select_first = Mat::Zero(1, in);
  select_first(0, 0) = 1.0;
  Mat select_rest = Mat::Zero(static_cast<Eigen::Index>(d), in);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(d); ++i) select_rest(i, i + 1) = 1.0;
  const ReluNetwork pick_first = affine_net(select_first, Vec::Zero(1));
  const ReluNetwork pick_rest = affine_net(select_rest, Vec::Zero(static_cast<Eigen::Index>(d)));

  // clamp to [-M, M]: s(y + M) - s(y - M) - M
  const ReluNetwork clamp = ReluNetwork::from_dense(
      {{(Mat(2, 1) << 1.0, 1.0).finished(), (Vec(2) << M, -M).finished()},
       {(Mat(1, 2) << 1.0, -1.0).finished(), (Vec(1) << -M).finished()}});

  const ReluNetwork times = build_times(M, delta2).net;
  // (ind, y_1..y_D) -> (ind, y_1, ind, y_2, ...) -> D products
  Mat fan = Mat::Zero(static_cast<Eigen::Index>(2 * D), static_cast<Eigen::Index>(D + 1));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(D); ++i) {
    fan(2 * i, 0) = 1.0;
    fan(2 * i + 1, i + 1) = 1.0;
  }
  const ReluNetwork products =
      compose(affine_net(fan, Vec::Zero(2 * static_cast<Eigen::Index>(D))),
              parallel(std::vector<ReluNetwork>(D, times), false));

  std::vector<ReluNetwork> branches;
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<ReluNetwork> parts;
    parts.push_back(compose(pick_first, build_indicator(thresholds[j], thresholds[j + 1], delta1, M).net));
    for (std::size_t i = 0; i < D; ++i) parts.push_back(compose(compose(pick_rest, chart_nets[j][i]), clamp));
    std::size_t depth = 0;
    for (const auto& p : parts) depth = std::max(depth, p.depth());
    for (auto& p : parts) p = pad_to_depth(p, depth);
    branches.push_back(compose(parallel(parts, true), products));
  }
  std::size_t depth = 0;
  for (const auto& b : branches) depth = std::max(depth, b.depth());
  for (auto& b : branches) b = pad_to_depth(b, depth);
  Mat sum = Mat::Zero(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(J * D));
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t i = 0; i < D; ++i) sum(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j * D + i)) = 1.0;
  AssembledGenerator out{compose(parallel(branches, true), affine_net(sum, Vec::Zero(static_cast<Eigen::Index>(D)))), 0.0};
  out.l1_bound = static_cast<double>(D) * static_cast<double>(J) * (M * delta1 + delta2 + delta3);
  return out;
}

McEstimate l1_distance_mc(const ReluNetwork& net,
                          const std::function<double(std::span<const double>)>& target,
                          std::size_t d, double lo, double hi, std::size_t samples,
                          std::uint64_t seed) {
  require(net.input_dim() == d && net.output_dim() == 1, ErrorCode::kShape,
          "l1_distance_mc: network must map R^d -> R");
  require(samples >= 2, ErrorCode::kParameter, "l1_distance_mc: need at least 2 samples");
  Rng rng(seed);
  const double width = hi - lo;
  const double volume = std::pow(width, static_cast<double>(d));
  const std::size_t batch = 8192;
  double sum = 0, sum_sq = 0;
  Mat pts(static_cast<Eigen::Index>(std::min(batch, samples)), static_cast<Eigen::Index>(d));
  std::vector<double> x(d);
  for (std::size_t start = 0; start < samples; start += batch) {
    const std::size_t count = std::min(batch, samples - start);
    pts.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
    for (std::size_t s = 0; s < count; ++s) {
      const double stratum = (static_cast<double>(start + s) + uniform01(rng)) / static_cast<double>(samples);
      pts(static_cast<Eigen::Index>(s), 0) = lo + width * stratum;
      for (std::size_t i = 1; i < d; ++i) pts(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = lo + width * uniform01(rng);
    }
    const Mat out = net.evaluate_batch(pts);
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t i = 0; i < d; ++i) x[i] = pts(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i));
      const double v = std::abs(out(static_cast<Eigen::Index>(s), 0) - target(x)) * volume;
      sum += v;
      sum_sq += v * v;
    }
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1));
  return {mean, 2.5758293035489 * std::sqrt(var / n), samples};
}

double sup_error_grid(const ReluNetwork& net,
                      const std::function<double(std::span<const double>)>& target, std::size_t d,
                      double lo, double hi, std::size_t per_axis) {
  require(per_axis >= 2, ErrorCode::kParameter, "sup_error_grid: need at least 2 points per axis");
  const auto total = static_cast<std::size_t>(std::pow(static_cast<double>(per_axis), static_cast<double>(d)));
  Mat pts(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(d));
  std::vector<std::size_t> k(d, 0);
  for (std::size_t s = 0; s < total; ++s) {
    for (std::size_t i = 0; i < d; ++i)
      pts(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) =
          lo + (hi - lo) * static_cast<double>(k[i]) / static_cast<double>(per_axis - 1);
    for (std::size_t i = 0; i < d; ++i) {
      if (++k[i] < per_axis) break;
      k[i] = 0;
    }
  }
  const Mat out = net.evaluate_batch(pts);
  double worst = 0;
  std::vector<double> x(d);
  for (std::size_t s = 0; s < total; ++s) {
    for (std::size_t i = 0; i < d; ++i) x[i] = pts(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i));
    worst = std::max(worst, std::abs(out(static_cast<Eigen::Index>(s), 0) - target(x)));
  }
  return worst;
}

}  // namespace mgl
