#include "mgl/transport.hpp"

#include "mgl/error.hpp"
#include "mgl/rng.hpp"
#include "mgl/wasserstein.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace mgl {

namespace {

constexpr double kZ99 = 2.5758293035489;

McValue mc_value(double sum, double sum_sq, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double mean = sum / nn;
  const double var = std::max(0.0, (sum_sq - nn * mean * mean) / (nn - 1));
  return {mean, kZ99 * std::sqrt(var / nn)};
}

}  // namespace

ChartMasses estimate_chart_masses(const ManifoldDensity& q, std::uint64_t seed, std::size_t samples) {
  require(samples >= 2, ErrorCode::kParameter, "estimate_chart_masses: need at least 2 samples");
  const ChartedManifold& m = q.manifold();
  const std::size_t J = m.chart_count();
  std::vector<double> s_mass(J, 0), s_mass_sq(J, 0), s_eta(J, 0), s_eta_sq(J, 0);
  std::vector<char> inside(J);
  Rng rng(seed);
  const double vol = m.volume();
  for (std::size_t s = 0; s < samples; ++s) {
    const Eigen::VectorXd b = m.sample_uniform_base(rng);
    const Eigen::VectorXd x = m.from_base(b);
    std::size_t k = 0;
    for (std::size_t j = 0; j < J; ++j) {
      inside[j] = m.in_chart(j, x) ? 1 : 0;
      k += static_cast<std::size_t>(inside[j]);
    }
    if (k == 0) continue;
    const double val = q.evaluate_base(b) * vol;
    for (std::size_t j = 0; j < J; ++j) {
      if (!inside[j]) continue;
      const double e = val / static_cast<double>(k);
      s_mass[j] += val;
      s_mass_sq[j] += val * val;
      s_eta[j] += e;
      s_eta_sq[j] += e * e;
    }
  }
  ChartMasses out;
  out.samples = samples;
  for (std::size_t j = 0; j < J; ++j) {
    out.chart_mass.push_back(mc_value(s_mass[j], s_mass_sq[j], samples));
    out.eta.push_back(mc_value(s_eta[j], s_eta_sq[j], samples));
    require(out.chart_mass[j].mean > 0, ErrorCode::kDegenerate, fmt::format("chart {} carries zero mass", j));
  }
  return out;
}

LocalTangentDensity::LocalTangentDensity(ManifoldDensity q, std::size_t chart, double chart_mass, double k_norm)
    : q_(std::move(q)), chart_(chart), chart_mass_(chart_mass), k_norm_(k_norm) {
  require(chart < q_.manifold().chart_count(), ErrorCode::kParameter, "chart index out of range");
  require(chart_mass > 0 && k_norm > 0, ErrorCode::kDegenerate,
          fmt::format("chart {} has a degenerate normalizer (mass {}, K_j {})", chart, chart_mass, k_norm));
}

double LocalTangentDensity::operator()(std::span<const double> v) const {
  const ChartedManifold& m = q_.manifold();
  double norm = 0;
  for (double e : v) norm += e * e;
  if (std::sqrt(norm) >= m.chart_radius()) return 0.0;
  const Eigen::VectorXd x = m.exp_map(chart_, v);
  const auto k = static_cast<double>(std::max<std::size_t>(1, m.multiplicity(x)));
  return q_(x) * m.volume_jacobian(chart_, v) / (chart_mass_ * k * k_norm_);
}

LocalTangentDensity local_tangent_density(const ManifoldDensity& q, const ChartMasses& masses, std::size_t chart) {
  require(chart < masses.chart_mass.size(), ErrorCode::kParameter, "chart index out of range");
  const double mass = masses.chart_mass[chart].mean;
  require(mass > 0, ErrorCode::kDegenerate, fmt::format("chart {} carries zero mass", chart));
  return LocalTangentDensity(q, chart, mass, masses.eta[chart].mean / mass);
}

QuantileMap::QuantileMap(const std::function<double(double)>& density, double lo, double hi, std::size_t knots) {
  require(lo < hi && knots >= 2, ErrorCode::kParameter, "QuantileMap: need lo < hi and at least 2 knots");
  knots_.resize(knots);
  for (std::size_t k = 0; k < knots; ++k)
    knots_[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(knots - 1);
  knots_.back() = hi;
  cdf_.assign(knots, 0.0);
  for (std::size_t k = 0; k + 1 < knots; ++k) {
    const double piece = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        density, knots_[k], knots_[k + 1], 3, 1e-10);
    require(piece >= 0 && std::isfinite(piece), ErrorCode::kParameter, "QuantileMap: density must be nonnegative");
    cdf_[k + 1] = cdf_[k] + piece;
  }
  total_ = cdf_.back();
  require(total_ > 0, ErrorCode::kDegenerate, "QuantileMap: density has zero mass");
  for (double& c : cdf_) c /= total_;
  cdf_.back() = 1.0;
  slope_.resize(knots);
  for (std::size_t k = 0; k < knots; ++k) slope_[k] = std::max(0.0, density(knots_[k])) / total_;
  // Fritsch-Carlson limiter keeps each cubic piece monotone.
  for (std::size_t k = 0; k + 1 < knots; ++k) {
    const double h = knots_[k + 1] - knots_[k];
    const double delta = (cdf_[k + 1] - cdf_[k]) / h;
    if (delta == 0) {
      slope_[k] = slope_[k + 1] = 0;
      continue;
    }
    const double a = slope_[k] / delta, b = slope_[k + 1] / delta;
    const double s = a * a + b * b;
    if (s > 9) {
      const double tau = 3 / std::sqrt(s);
      slope_[k] = tau * a * delta;
      slope_[k + 1] = tau * b * delta;
    }
  }
}

double QuantileMap::spline(std::size_t k, double t) const {
  const double h = knots_[k + 1] - knots_[k];
  const double s = (t - knots_[k]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * cdf_[k] + (s3 - 2 * s2 + s) * h * slope_[k] + (-2 * s3 + 3 * s2) * cdf_[k + 1] +
         (s3 - s2) * h * slope_[k + 1];
}

double QuantileMap::cdf(double t) const {
  if (t <= knots_.front()) return 0.0;
  if (t >= knots_.back()) return 1.0;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const auto k = static_cast<std::size_t>(it - knots_.begin()) - 1;
  return std::clamp(spline(k, t), 0.0, 1.0);
}

double QuantileMap::operator()(double u) const {
  if (u <= 0) return knots_.front();
  if (u >= 1) return knots_.back();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto k = std::min(static_cast<std::size_t>(it - cdf_.begin()) - 1, knots_.size() - 2);
  double a = knots_[k], b = knots_[k + 1];
  const double h = b - a;
  double t = a + h * (u - cdf_[k]) / std::max(cdf_[k + 1] - cdf_[k], 1e-300);
  for (int iter = 0; iter < 100; ++iter) {
    const double f = spline(k, t) - u;
    if (std::abs(f) <= 1e-15) break;
    if (f > 0)
      b = t;
    else
      a = t;
    // Newton step on the Hermite piece, bisection when it leaves the bracket.
    const double s = (t - knots_[k]) / h, s2 = s * s;
    const double deriv = ((6 * s2 - 6 * s) * cdf_[k] + (3 * s2 - 4 * s + 1) * h * slope_[k] +
                          (-6 * s2 + 6 * s) * cdf_[k + 1] + (3 * s2 - 2 * s) * h * slope_[k + 1]) /
                         h;
    double next = deriv > 0 ? t - f / deriv : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - t) <= 1e-16 * std::max(1.0, std::abs(t))) {
      t = next;
      break;
    }
    t = next;
  }
  return t;
}

TriangularMap::TriangularMap(const std::function<double(double, double)>& density, double lo, double hi,
                             std::size_t resolution, std::size_t sub)
    : n_(resolution), lo_(lo), hi_(hi), h_((hi - lo) / static_cast<double>(resolution)) {
  require(lo < hi && resolution >= 2 && sub >= 1, ErrorCode::kParameter,
          "TriangularMap: need lo < hi, resolution >= 2, sub >= 1");
  cells_.assign(n_ * n_, 0.0);
  const double hs = h_ / static_cast<double>(sub);
  for (std::size_t c = 0; c < n_; ++c)
    for (std::size_t r = 0; r < n_; ++r) {
      double s = 0;
      for (std::size_t a = 0; a < sub; ++a)
        for (std::size_t b = 0; b < sub; ++b)
          s += density(lo_ + static_cast<double>(c) * h_ + (static_cast<double>(a) + 0.5) * hs,
                       lo_ + static_cast<double>(r) * h_ + (static_cast<double>(b) + 0.5) * hs);
      cells_[c * n_ + r] = std::max(0.0, s) / static_cast<double>(sub * sub) * h_ * h_;
    }
  column_cum_.assign(n_ + 1, 0.0);
  row_cum_.assign(n_ * (n_ + 1), 0.0);
  for (std::size_t c = 0; c < n_; ++c) {
    double* cum = row_cum_.data() + c * (n_ + 1);
    for (std::size_t r = 0; r < n_; ++r) cum[r + 1] = cum[r] + cells_[c * n_ + r];
    column_cum_[c + 1] = column_cum_[c] + cum[n_];
  }
  require(column_cum_[n_] > 0, ErrorCode::kDegenerate, "TriangularMap: density has zero mass");
}

std::size_t TriangularMap::column_of(double u1, double* local) const {
  const double target = std::clamp(u1, 0.0, 1.0) * column_cum_[n_];
  auto it = std::lower_bound(column_cum_.begin() + 1, column_cum_.end(), target);
  auto c = static_cast<std::size_t>(it - column_cum_.begin()) - 1;
  c = std::min(c, n_ - 1);
  // Skip empty columns (their CDF piece is flat).
  while (c + 1 < n_ && column_cum_[c + 1] - column_cum_[c] <= 0) ++c;
  while (c > 0 && column_cum_[c + 1] - column_cum_[c] <= 0) --c;
  const double mass = column_cum_[c + 1] - column_cum_[c];
  *local = std::clamp((target - column_cum_[c]) / mass, 0.0, 1.0);
  return c;
}

double TriangularMap::first(double u1) const {
  double local = 0;
  const std::size_t c = column_of(u1, &local);
  return lo_ + h_ * (static_cast<double>(c) + local);
}

Eigen::Vector2d TriangularMap::operator()(double u1, double u2) const {
  double local = 0;
  const std::size_t c = column_of(u1, &local);
  const double* cum = row_cum_.data() + c * (n_ + 1);
  const double target = std::clamp(u2, 0.0, 1.0) * cum[n_];
  auto it = std::lower_bound(cum + 1, cum + n_ + 1, target);
  auto r = std::min(static_cast<std::size_t>(it - cum) - 1, n_ - 1);
  while (r + 1 < n_ && cum[r + 1] - cum[r] <= 0) ++r;
  while (r > 0 && cum[r + 1] - cum[r] <= 0) --r;
  const double rl = std::clamp((target - cum[r]) / (cum[r + 1] - cum[r]), 0.0, 1.0);
  return {lo_ + h_ * (static_cast<double>(c) + local), lo_ + h_ * (static_cast<double>(r) + rl)};
}

LocalTransport::LocalTransport(std::size_t chart, std::shared_ptr<const QuantileMap> map)
    : chart_(chart), quantile_(std::move(map)) {}

LocalTransport::LocalTransport(std::size_t chart, std::shared_ptr<const TriangularMap> map)
    : chart_(chart), triangular_(std::move(map)) {}

Eigen::VectorXd LocalTransport::tangent(std::span<const double> u) const {
  require(u.size() == dim(), ErrorCode::kShape, "LocalTransport: source point has wrong dimension");
  if (quantile_) return Eigen::VectorXd::Constant(1, (*quantile_)(u[0]));
  const Eigen::Vector2d v = (*triangular_)(u[0], u[1]);
  return Eigen::VectorXd(v);
}

LocalTransport quantile_transport_1d(const LocalTangentDensity& q, std::size_t knots) {
  require(q.dim() == 1, ErrorCode::kScope, "quantile_transport_1d: density must be one-dimensional");
  const double r = q.support_radius();
  auto f = [&](double t) {
    const double v[1] = {t};
    return q(v);
  };
  auto map = std::make_shared<QuantileMap>(f, -r, r, knots);
  require(std::abs(map->total_mass() - 1.0) <= 0.1, ErrorCode::kParameter,
          fmt::format("quantile_transport_1d: density integrates to {}, not 1", map->total_mass()));
  return LocalTransport(q.chart(), std::shared_ptr<const QuantileMap>(std::move(map)));
}

LocalTransport triangular_transport(const LocalTangentDensity& q, std::size_t resolution) {
  require(q.dim() == 2, ErrorCode::kScope, "triangular_transport: density must be two-dimensional");
  const double r = q.support_radius();
  auto f = [&](double a, double b) {
    const double v[2] = {a, b};
    return q(v);
  };
  auto map = std::make_shared<TriangularMap>(f, -r, r, resolution);
  return LocalTransport(q.chart(), std::shared_ptr<const TriangularMap>(std::move(map)));
}

GlobalTransport::GlobalTransport(ChartedManifold manifold, std::vector<LocalTransport> locals,
                                 std::vector<double> weights)
    : manifold_(std::move(manifold)), locals_(std::move(locals)), weights_(std::move(weights)) {
  require(!locals_.empty() && locals_.size() == weights_.size(), ErrorCode::kParameter,
          "GlobalTransport: need one weight per local transport");
  double sum = 0;
  for (double w : weights_) {
    require(w > 0, ErrorCode::kParameter, "GlobalTransport: weights must be positive");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::kParameter,
          fmt::format("GlobalTransport: weights sum to {}, not 1", sum));
  for (const auto& l : locals_)
    require(l.dim() == manifold_.intrinsic_dim() && l.chart() < manifold_.chart_count(), ErrorCode::kShape,
            "GlobalTransport: local transport does not match the manifold");
  thresholds_.assign(1, 0.0);
  for (double w : weights_) thresholds_.push_back(thresholds_.back() + w);
  thresholds_.back() = 1.0;
}

std::size_t GlobalTransport::select_chart(double x1) const {
  for (std::size_t j = 0; j + 1 < thresholds_.size(); ++j)
    if (x1 <= thresholds_[j + 1]) return j;
  return locals_.size() - 1;
}

Eigen::VectorXd GlobalTransport::chart_map(std::size_t j, std::span<const double> u) const {
  const Eigen::VectorXd v = locals_.at(j).tangent(u);
  return manifold_.exp_map(locals_[j].chart(), std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Eigen::VectorXd GlobalTransport::operator()(std::span<const double> x) const {
  require(x.size() == source_dim(), ErrorCode::kShape, "GlobalTransport: source point has wrong dimension");
  return chart_map(select_chart(x[0]), x.subspan(1));
}

GlobalTransport assemble_global_transport(const ChartedManifold& m, std::vector<LocalTransport> locals,
                                          std::vector<double> weights) {
  return GlobalTransport(m, std::move(locals), std::move(weights));
}

OracleTransport build_oracle_transport(const ManifoldDensity& q, std::uint64_t seed, std::size_t mc_samples) {
  const ChartedManifold& m = q.manifold();
  const std::size_t d = m.intrinsic_dim();
  require(d == 1 || d == 2, ErrorCode::kScope,
          fmt::format("oracle transports are available for d in {{1, 2}} only (got d = {})", d));
  ChartMasses masses = estimate_chart_masses(q, seed, mc_samples);
  std::vector<LocalTangentDensity> densities;
  std::vector<LocalTransport> locals;
  std::vector<double> weights;
  double total = 0;
  for (std::size_t j = 0; j < m.chart_count(); ++j) {
    densities.push_back(local_tangent_density(q, masses, j));
    locals.push_back(d == 1 ? quantile_transport_1d(densities.back()) : triangular_transport(densities.back()));
    weights.push_back(masses.eta[j].mean);
    total += masses.eta[j].mean;
  }
  for (double& w : weights) w /= total;
  GlobalTransport g(m, std::move(locals), std::move(weights));
  return OracleTransport{std::move(masses), std::move(densities), std::move(g)};
}

EmpiricalMeasure pushforward_sample(const GlobalTransport& g, std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  EmpiricalMeasure out;
  out.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(g.manifold().ambient_dim()));
  std::vector<double> z(g.source_dim());
  for (std::size_t i = 0; i < n; ++i) {
    for (double& e : z) e = uniform_open01(rng);
    out.points.row(static_cast<Eigen::Index>(i)) = g(z).transpose();
  }
  return out;
}

Eigen::MatrixXd sample_tangent_density(const LocalTangentDensity& q, std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  const std::size_t d = q.dim();
  const double r = q.support_radius(), upper = q.upper_bound();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<double> v(d);
  for (std::size_t i = 0; i < n;) {
    double norm = 0;
    for (double& e : v) {
      e = r * (2 * uniform01(rng) - 1);
      norm += e * e;
    }
    if (norm >= r * r) continue;
    if (uniform01(rng) * upper >= q(v)) continue;
    for (std::size_t k = 0; k < d; ++k) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[k];
    ++i;
  }
  return out;
}

TransportBoundCheck l1_transport_bound_check(const PointMap& f, const PointMap& g,
                                             const std::function<Eigen::VectorXd(Rng&)>& source, std::size_t n,
                                             std::uint64_t seed) {
  require(n >= 2, ErrorCode::kParameter, "l1_transport_bound_check: need at least 2 samples");
  Rng rng(seed);
  EmpiricalMeasure fa, ga;
  double sum = 0, sum_sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd x = source(rng);
    const Eigen::VectorXd fx = f(x), gx = g(x);
    if (i == 0) {
      fa.points.resize(static_cast<Eigen::Index>(n), fx.size());
      ga.points.resize(static_cast<Eigen::Index>(n), gx.size());
    }
    fa.points.row(static_cast<Eigen::Index>(i)) = fx.transpose();
    ga.points.row(static_cast<Eigen::Index>(i)) = gx.transpose();
    const double dist = (fx - gx).norm();
    sum += dist;
    sum_sq += dist * dist;
  }
  TransportBoundCheck out;
  if (fa.dim() == 1) {
    out.w1 = w1_1d(std::span<const double>(fa.points.data(), n), std::span<const double>(ga.points.data(), n));
  } else {
    out.w1 = w1_exact(fa, ga, {.cap = std::max(n, kDefaultW1Cap)});
  }
  const McValue l1 = mc_value(sum, sum_sq, n);
  out.l1 = l1.mean;
  out.l1_half_width = l1.half_width;
  out.holds = out.w1 <= out.l1 + out.l1_half_width;
  return out;
}

}  // namespace mgl
