#include "mgl/manifold.hpp"

#include "mgl/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mgl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kOffManifoldTol = 1e-6;

// Wraps an angle difference into (-pi, pi].
double wrap(double a) {
  a = std::remainder(a, 2 * kPi);
  if (a <= -kPi) a += 2 * kPi;
  return a;
}

// Smallest grid count k with cubic covering radius pi R sqrt(d) / k < pi R / 2.
std::size_t torus_grid(std::size_t d) {
  std::size_t k = 3;
  while (static_cast<double>(k) <= 2.0 * std::sqrt(static_cast<double>(d))) ++k;
  return k;
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& s, const std::string& spec) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kParse, fmt::format("cannot parse number '{}' in spec '{}'", s, spec));
}

std::uint64_t parse_uint(const std::string& s, const std::string& spec) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kParse, fmt::format("cannot parse integer '{}' in spec '{}'", s, spec));
}

}  // namespace

ChartedManifold::ChartedManifold(ManifoldKind kind, std::size_t d, double radius)
    : kind_(kind), d_(d), radius_(radius) {
  require(radius > 0 && std::isfinite(radius), ErrorCode::kParameter, "manifold radius must be positive");
  switch (kind) {
    case ManifoldKind::kCircle:
      base_dim_ = 2;
      for (int j = 0; j < 3; ++j) centers_.push_back({2 * kPi * j / 3.0});
      break;
    case ManifoldKind::kSphere:
      base_dim_ = 3;
      for (int axis = 0; axis < 3; ++axis)
        for (double sign : {1.0, -1.0}) centers_.push_back({static_cast<double>(axis), sign});
      break;
    case ManifoldKind::kFlatTorus: {
      require(d >= 1, ErrorCode::kParameter, "flat torus dimension must be positive");
      base_dim_ = 2 * d;
      const std::size_t k = torus_grid(d);
      const auto total = static_cast<std::size_t>(std::pow(static_cast<double>(k), static_cast<double>(d)));
      std::vector<std::size_t> idx(d, 0);
      for (std::size_t c = 0; c < total; ++c) {
        std::vector<double> angles(d);
        for (std::size_t i = 0; i < d; ++i) angles[i] = 2 * kPi * static_cast<double>(idx[i]) / static_cast<double>(k);
        centers_.push_back(std::move(angles));
        for (std::size_t i = 0; i < d; ++i) {
          if (++idx[i] < k) break;
          idx[i] = 0;
        }
      }
      break;
    }
  }
}

ChartedManifold ChartedManifold::circle(double radius) { return {ManifoldKind::kCircle, 1, radius}; }
ChartedManifold ChartedManifold::sphere(double radius) { return {ManifoldKind::kSphere, 2, radius}; }
ChartedManifold ChartedManifold::flat_torus(std::size_t d, double radius) {
  return {ManifoldKind::kFlatTorus, d, radius};
}

std::size_t ChartedManifold::ambient_dim() const noexcept {
  return is_embedded() ? static_cast<std::size_t>(embedding_.rows()) : base_dim_;
}

double ChartedManifold::bound() const noexcept {
  const double norm = kind_ == ManifoldKind::kFlatTorus ? radius_ * std::sqrt(static_cast<double>(d_)) : radius_;
  return is_embedded() ? norm : radius_;
}

double ChartedManifold::chart_radius() const noexcept { return kPi * reach() / 2; }
double ChartedManifold::injectivity_radius() const noexcept { return kPi * reach(); }

double ChartedManifold::volume() const noexcept {
  switch (kind_) {
    case ManifoldKind::kCircle: return 2 * kPi * radius_;
    case ManifoldKind::kSphere: return 4 * kPi * radius_ * radius_;
    case ManifoldKind::kFlatTorus: return std::pow(2 * kPi * radius_, static_cast<double>(d_));
  }
  return 0;
}

std::string ChartedManifold::spec() const {
  std::string s;
  switch (kind_) {
    case ManifoldKind::kCircle: s = fmt::format("circle:{}", radius_); break;
    case ManifoldKind::kSphere: s = fmt::format("sphere:{}", radius_); break;
    case ManifoldKind::kFlatTorus: s = fmt::format("torus:{}:{}", d_, radius_); break;
  }
  if (is_embedded()) s += fmt::format(":embed:{}:{}", embedding_.rows(), embed_seed_);
  return s;
}

Eigen::VectorXd ChartedManifold::to_base(const Eigen::VectorXd& x) const {
  require(static_cast<std::size_t>(x.size()) == ambient_dim(), ErrorCode::kShape,
          fmt::format("point has dimension {}, manifold ambient dimension is {}", x.size(), ambient_dim()));
  return is_embedded() ? Eigen::VectorXd(embedding_.transpose() * x) : x;
}

Eigen::VectorXd ChartedManifold::from_base(const Eigen::VectorXd& b) const {
  return is_embedded() ? Eigen::VectorXd(embedding_ * b) : b;
}

Eigen::VectorXd ChartedManifold::chart_center(std::size_t j) const {
  require(j < chart_count(), ErrorCode::kParameter, "chart index out of range");
  std::vector<double> zero(d_, 0.0);
  return from_base(base_exp(j, zero));
}

double ChartedManifold::base_distance_to_manifold(const Eigen::VectorXd& b) const {
  switch (kind_) {
    case ManifoldKind::kCircle:
    case ManifoldKind::kSphere: return std::abs(b.norm() - radius_);
    case ManifoldKind::kFlatTorus: {
      double s = 0;
      for (std::size_t i = 0; i < d_; ++i) {
        const double r = std::hypot(b[2 * i], b[2 * i + 1]) - radius_;
        s += r * r;
      }
      return std::sqrt(s);
    }
  }
  return 0;
}

double ChartedManifold::distance_to_manifold(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd b = to_base(x);
  double off = 0;
  if (is_embedded()) off = (x - embedding_ * b).norm();
  return std::hypot(off, base_distance_to_manifold(b));
}

void ChartedManifold::require_on_manifold(const Eigen::VectorXd& b, const char* op) const {
  const double dist = base_distance_to_manifold(b);
  require(dist <= kOffManifoldTol, ErrorCode::kDomain,
          fmt::format("{}: point is {} away from the manifold (tolerance {})", op, dist, kOffManifoldTol));
}

Eigen::VectorXd ChartedManifold::base_exp(std::size_t j, std::span<const double> v) const {
  const auto& c = centers_[j];
  Eigen::VectorXd out(static_cast<Eigen::Index>(base_dim_));
  switch (kind_) {
    case ManifoldKind::kCircle: {
      const double a = c[0] + v[0] / radius_;
      out << radius_ * std::cos(a), radius_ * std::sin(a);
      break;
    }
    case ManifoldKind::kFlatTorus:
      for (std::size_t i = 0; i < d_; ++i) {
        const double a = c[i] + v[i] / radius_;
        out[2 * i] = radius_ * std::cos(a);
        out[2 * i + 1] = radius_ * std::sin(a);
      }
      break;
    case ManifoldKind::kSphere: {
      const auto axis = static_cast<Eigen::Index>(c[0]);
      const double sign = c[1];
      const double norm = std::hypot(v[0], v[1]);
      const double t = norm / radius_;
      out.setZero();
      out[axis] = sign * radius_ * std::cos(t);
      const double s = norm > 0 ? radius_ * std::sin(t) / norm : 0.0;
      out[(axis + 1) % 3] += s * v[0];
      out[(axis + 2) % 3] += s * v[1];
      break;
    }
  }
  return out;
}

Eigen::VectorXd ChartedManifold::base_log(std::size_t j, const Eigen::VectorXd& b) const {
  const auto& c = centers_[j];
  Eigen::VectorXd v(static_cast<Eigen::Index>(d_));
  switch (kind_) {
    case ManifoldKind::kCircle:
      v[0] = radius_ * wrap(std::atan2(b[1], b[0]) - c[0]);
      break;
    case ManifoldKind::kFlatTorus:
      for (std::size_t i = 0; i < d_; ++i)
        v[static_cast<Eigen::Index>(i)] = radius_ * wrap(std::atan2(b[2 * i + 1], b[2 * i]) - c[i]);
      break;
    case ManifoldKind::kSphere: {
      const auto axis = static_cast<Eigen::Index>(c[0]);
      const double sign = c[1];
      const double along = sign * b[axis];
      const double p0 = b[(axis + 1) % 3], p1 = b[(axis + 2) % 3];
      const double perp = std::hypot(p0, p1);
      const double t = std::atan2(perp, along);
      if (perp == 0) {
        v.setZero();
      } else {
        v[0] = radius_ * t * p0 / perp;
        v[1] = radius_ * t * p1 / perp;
      }
      break;
    }
  }
  return v;
}

Eigen::VectorXd ChartedManifold::exp_map(std::size_t j, std::span<const double> v) const {
  require(j < chart_count(), ErrorCode::kParameter, "chart index out of range");
  require(v.size() == d_, ErrorCode::kShape, "tangent vector has wrong dimension");
  double norm = 0;
  for (double e : v) norm += e * e;
  norm = std::sqrt(norm);
  require(norm < injectivity_radius(), ErrorCode::kDomain,
          fmt::format("exp_map: |v| = {} violates the injectivity radius {}", norm, injectivity_radius()));
  return from_base(base_exp(j, v));
}

Eigen::VectorXd ChartedManifold::log_map(std::size_t j, const Eigen::VectorXd& x) const {
  require(j < chart_count(), ErrorCode::kParameter, "chart index out of range");
  const Eigen::VectorXd b = to_base(x);
  require_on_manifold(b, "log_map");
  Eigen::VectorXd v = base_log(j, b);
  require(v.norm() < chart_radius() * (1 + 1e-12), ErrorCode::kDomain,
          fmt::format("log_map: point at geodesic distance {} is outside chart {} (radius {})", v.norm(), j,
                      chart_radius()));
  return v;
}

double ChartedManifold::base_geodesic(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  switch (kind_) {
    case ManifoldKind::kCircle:
      return radius_ * std::abs(wrap(std::atan2(b[1], b[0]) - std::atan2(a[1], a[0])));
    case ManifoldKind::kFlatTorus: {
      double s = 0;
      for (std::size_t i = 0; i < d_; ++i) {
        const double da = radius_ * wrap(std::atan2(b[2 * i + 1], b[2 * i]) - std::atan2(a[2 * i + 1], a[2 * i]));
        s += da * da;
      }
      return std::sqrt(s);
    }
    case ManifoldKind::kSphere: {
      const Eigen::Vector3d u = a.head<3>().normalized(), w = b.head<3>().normalized();
      return radius_ * std::atan2(u.cross(w).norm(), u.dot(w));
    }
  }
  return 0;
}

double ChartedManifold::geodesic_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  const Eigen::VectorXd a = to_base(x), b = to_base(y);
  require(distance_to_manifold(x) <= kOffManifoldTol && distance_to_manifold(y) <= kOffManifoldTol,
          ErrorCode::kDomain, "geodesic_distance: point off the manifold");
  return base_geodesic(a, b);
}

double ChartedManifold::volume_jacobian(std::size_t, std::span<const double> v) const {
  if (kind_ != ManifoldKind::kSphere) return 1.0;
  const double t = std::hypot(v[0], v[1]) / radius_;
  return t == 0 ? 1.0 : std::sin(t) / t;
}

bool ChartedManifold::in_chart(std::size_t j, const Eigen::VectorXd& x) const {
  const Eigen::VectorXd b = to_base(x);
  return base_log(j, b).norm() < chart_radius();
}

std::size_t ChartedManifold::multiplicity(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd b = to_base(x);
  std::size_t k = 0;
  for (std::size_t j = 0; j < chart_count(); ++j)
    if (base_log(j, b).norm() < chart_radius()) ++k;
  return k;
}

Eigen::VectorXd ChartedManifold::sample_uniform_base(Rng& rng) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(base_dim_));
  switch (kind_) {
    case ManifoldKind::kCircle:
    case ManifoldKind::kFlatTorus:
      for (std::size_t i = 0; i < base_dim_ / 2; ++i) {
        const double a = 2 * kPi * uniform01(rng);
        out[2 * i] = radius_ * std::cos(a);
        out[2 * i + 1] = radius_ * std::sin(a);
      }
      break;
    case ManifoldKind::kSphere: {
      double norm = 0;
      do {
        for (auto& e : out) e = standard_normal(rng);
        norm = out.norm();
      } while (norm == 0);
      out *= radius_ / norm;
      break;
    }
  }
  return out;
}

ChartedManifold ambient_embed(const ChartedManifold& m, std::size_t target_dim, std::uint64_t seed) {
  require(target_dim >= m.ambient_dim(), ErrorCode::kParameter,
          fmt::format("ambient_embed: target dimension {} is below the ambient dimension {}", target_dim,
                      m.ambient_dim()));
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(target_dim);
  Eigen::MatrixXd g(n, n);
  for (auto& e : g.reshaped()) e = standard_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // Sign fix makes Q Haar-distributed and independent of the QR convention.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  ChartedManifold out = m;
  const auto current = static_cast<Eigen::Index>(m.ambient_dim());
  const Eigen::MatrixXd lift = q.leftCols(current);  // pad with zeros, then rotate
  out.embedding_ = m.is_embedded() ? Eigen::MatrixXd(lift * m.embedding_) : lift;
  out.embed_seed_ = seed;
  return out;
}

std::vector<std::size_t> geodesic_ball_cover(const ChartedManifold& m) {
  Rng rng(derive_seed(0x636f766572ULL, stream_id(m.spec())));
  const double r = m.chart_radius();
  for (int s = 0; s < 100000; ++s) {
    const Eigen::VectorXd x = m.from_base(m.sample_uniform_base(rng));
    bool covered = false;
    for (std::size_t j = 0; j < m.chart_count() && !covered; ++j) covered = m.in_chart(j, x);
    require(covered, ErrorCode::kDegenerate,
            fmt::format("geodesic_ball_cover: a sample of {} is not covered by radius {}", m.spec(), r));
  }
  std::vector<std::size_t> idx(m.chart_count());
  for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
  return idx;
}

ChartedManifold parse_manifold(const std::string& spec) {
  const auto parts = split(spec, ":,");
  require(!parts.empty(), ErrorCode::kParse, "empty manifold spec");
  std::size_t pos = 0;
  const std::string kind = parts[pos++];
  auto need = [&](std::size_t count) {
    require(parts.size() >= pos + count, ErrorCode::kParse, fmt::format("manifold spec '{}' is incomplete", spec));
  };
  ChartedManifold m = [&] {
    if (kind == "circle") {
      need(1);
      return ChartedManifold::circle(parse_real(parts[pos++], spec));
    }
    if (kind == "sphere") {
      need(1);
      return ChartedManifold::sphere(parse_real(parts[pos++], spec));
    }
    if (kind == "torus") {
      need(2);
      const auto d = parse_uint(parts[pos++], spec);
      return ChartedManifold::flat_torus(d, parse_real(parts[pos++], spec));
    }
    fail(ErrorCode::kParse, fmt::format("unknown manifold kind '{}' in '{}'", kind, spec));
  }();
  while (pos < parts.size()) {
    require(parts[pos] == "embed", ErrorCode::kParse,
            fmt::format("unexpected token '{}' in manifold spec '{}'", parts[pos], spec));
    ++pos;
    need(2);
    const auto dim = parse_uint(parts[pos++], spec);
    const auto seed = parse_uint(parts[pos++], spec);
    m = ambient_embed(m, dim, seed);
  }
  return m;
}

ManifoldDensity::ManifoldDensity(ChartedManifold m, DensityKind kind, double a)
    : manifold_(std::move(m)), kind_(kind), a_(a) {
  const double vol = manifold_.volume();
  if (kind == DensityKind::kUniform) {
    lower_ = upper_ = 1.0 / vol;
  } else {
    require(a > 1, ErrorCode::kParameter, fmt::format("cosine density needs a > 1 (got {})", a));
    lower_ = (a - 1) / (a * vol);
    upper_ = (a + 1) / (a * vol);
  }
}

ManifoldDensity ManifoldDensity::uniform(ChartedManifold m) { return {std::move(m), DensityKind::kUniform, 0}; }
ManifoldDensity ManifoldDensity::cosine(ChartedManifold m, double a) {
  return {std::move(m), DensityKind::kCosine, a};
}

std::string ManifoldDensity::spec() const {
  return kind_ == DensityKind::kUniform ? std::string("uniform") : fmt::format("cosine:{}", a_);
}

double ManifoldDensity::evaluate_base(const Eigen::VectorXd& b) const {
  const double vol = manifold_.volume();
  if (kind_ == DensityKind::kUniform) return 1.0 / vol;
  return (a_ + b[0] / manifold_.radius()) / (a_ * vol);
}

double ManifoldDensity::operator()(const Eigen::VectorXd& x) const { return evaluate_base(manifold_.to_base(x)); }

ManifoldDensity parse_density(const ChartedManifold& m, const std::string& spec) {
  const auto parts = split(spec, ":");
  if (parts.size() == 1 && parts[0] == "uniform") return ManifoldDensity::uniform(m);
  if (parts.size() == 2 && parts[0] == "cosine") return ManifoldDensity::cosine(m, parse_real(parts[1], spec));
  fail(ErrorCode::kParse, fmt::format("unknown density spec '{}' (expected 'uniform' or 'cosine:a')", spec));
}

EmpiricalMeasure sample_density(const ManifoldDensity& q, std::uint64_t seed, std::size_t n) {
  const ChartedManifold& m = q.manifold();
  Rng rng(seed);
  EmpiricalMeasure out;
  out.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m.ambient_dim()));
  const double c = q.upper_bound();
  for (std::size_t i = 0; i < n;) {
    const Eigen::VectorXd b = m.sample_uniform_base(rng);
    if (q.kind() != DensityKind::kUniform && uniform01(rng) * c >= q.evaluate_base(b)) continue;
    out.points.row(static_cast<Eigen::Index>(i++)) = m.from_base(b).transpose();
  }
  return out;
}

}  // namespace mgl
