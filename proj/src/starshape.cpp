#include "mgl/starshape.hpp"

#include "mgl/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mgl {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
  const Eigen::Vector2d e = q - p;
  const double t = std::clamp(-p.dot(e) / e.squaredNorm(), 0.0, 1.0);
  return (p + t * e).norm();
}

Eigen::VectorXd sample_ball(Rng& rng, std::size_t dim, double radius) {
  Eigen::VectorXd g(static_cast<Eigen::Index>(dim));
  double n = 0;
  do {
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = standard_normal(rng);
    n = g.norm();
  } while (n == 0);
  return g * (radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(dim)) / n);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) out.push_back(part);
  return out;
}

double parse_double(const std::string& s, const std::string& spec) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kParse, fmt::format("star set spec '{}': '{}' is not a number", spec, s));
}

std::uint64_t parse_uint(const std::string& s, const std::string& spec) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kParse, fmt::format("star set spec '{}': '{}' is not a nonnegative integer", spec, s));
}

}  // namespace

StarShapedSet StarShapedSet::ball(std::size_t dim, double radius) {
  require(dim >= 1, ErrorCode::kParameter, "ball: dimension must be positive");
  require(radius > 0 && std::isfinite(radius), ErrorCode::kParameter, "ball: radius must be positive");
  StarShapedSet s;
  s.dim_ = dim;
  s.ball_radius_ = s.eta_ = s.outer_ = s.delta_ = radius;
  s.spec_ = fmt::format("ball:{}:{:.17g}", dim, radius);
  return s;
}

StarShapedSet StarShapedSet::polygon(std::vector<Eigen::Vector2d> vertices) {
  const std::size_t n = vertices.size();
  require(n >= 3, ErrorCode::kParameter, "polygon: need at least 3 vertices");
  double turn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = vertices[i];
    const auto& q = vertices[(i + 1) % n];
    require(p.allFinite() && p.norm() > 0, ErrorCode::kParameter, "polygon: vertices must be finite and nonzero");
    require(cross(p, q) > 0, ErrorCode::kParameter,
            fmt::format("polygon: edge {} is not seen counter-clockwise from the origin", i));
    turn += std::atan2(cross(p, q), p.dot(q));
  }
  require(std::abs(turn - kTwoPi) < 1e-9, ErrorCode::kParameter,
          "polygon: vertices must wind exactly once around the origin");
  StarShapedSet s;
  s.dim_ = 2;
  s.eta_ = std::numeric_limits<double>::infinity();
  std::string body;
  for (std::size_t i = 0; i < n; ++i) {
    s.eta_ = std::min(s.eta_, segment_distance(vertices[i], vertices[(i + 1) % n]));
    s.outer_ = std::max(s.outer_, vertices[i].norm());
    body += fmt::format("{}{:.17g},{:.17g}", i ? ";" : "", vertices[i].x(), vertices[i].y());
  }
  s.delta_ = s.eta_;
  s.vertices_ = std::move(vertices);
  s.spec_ = "polygon:" + body;
  return s;
}

StarShapedSet StarShapedSet::random_polygon(std::size_t vertices, std::uint64_t seed, double r_min, double r_max) {
  require(vertices >= 4, ErrorCode::kParameter, "random_polygon: need at least 4 vertices");
  require(0 < r_min && r_min <= r_max, ErrorCode::kParameter, "random_polygon: need 0 < r_min <= r_max");
  Rng rng(seed);
  std::vector<Eigen::Vector2d> pts;
  const double offset = kTwoPi * uniform01(rng);
  for (std::size_t i = 0; i < vertices; ++i) {
    // Jitter inside [0.1, 0.9) of each sector keeps every angular gap below pi.
    const double theta = offset + kTwoPi * (static_cast<double>(i) + 0.1 + 0.8 * uniform01(rng)) /
                                      static_cast<double>(vertices);
    const double r = r_min + (r_max - r_min) * uniform01(rng);
    pts.emplace_back(r * std::cos(theta), r * std::sin(theta));
  }
  StarShapedSet s = polygon(std::move(pts));
  s.spec_ = fmt::format("random:{}:{}", vertices, seed);
  if (r_min != 0.5 || r_max != 1.5) s.spec_ = s.spec_ + fmt::format(":{:.17g}:{:.17g}", r_min, r_max);
  return s;
}

StarShapedSet StarShapedSet::with_eta(double eta) const {
  require(eta > 0 && eta <= eta_ * (1 + 1e-12), ErrorCode::kParameter,
          fmt::format("with_eta: {} is not a certified kernel radius (max {})", eta, eta_));
  StarShapedSet s = *this;
  s.eta_ = s.delta_ = eta;
  s.spec_ = spec_ + fmt::format(":eta={:.17g}", eta);
  return s;
}

StarShapedSet StarShapedSet::with_delta(double delta) const {
  require(delta > 0 && delta <= eta_, ErrorCode::kParameter,
          fmt::format("with_delta: need 0 < delta <= eta = {}", eta_));
  StarShapedSet s = *this;
  s.delta_ = delta;
  return s;
}

double StarShapedSet::radial(const Eigen::VectorXd& u) const {
  require(static_cast<std::size_t>(u.size()) == dim_, ErrorCode::kShape, "radial: direction has wrong dimension");
  const double n = u.norm();
  require(n > 0, ErrorCode::kDomain, "radial: zero direction");
  if (!is_polygon()) return ball_radius_;
  const Eigen::Vector2d d(u[0] / n, u[1] / n);
  double best = 0;
  const std::size_t m = vertices_.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::Vector2d& p = vertices_[i];
    const Eigen::Vector2d e = vertices_[(i + 1) % m] - p;
    const double denom = cross(d, e);
    if (denom == 0) continue;
    const double t = cross(p, e) / denom;
    const double s = cross(p, d) / denom;
    // Closed segments: at a vertex direction both neighbours hit; the max wins.
    if (t > 0 && s >= -1e-12 && s <= 1 + 1e-12) best = std::max(best, t);
  }
  require(best > 0, ErrorCode::kInternal, "radial: ray missed the polygon boundary");
  return best;
}

double StarShapedSet::radial_at(const Eigen::VectorXd& x) const {
  if (x.norm() == 0) return outer_;
  return radial(x);
}

bool StarShapedSet::contains(const Eigen::VectorXd& x, double tol) const {
  const double n = x.norm();
  return n <= eta_ || n <= radial(x) + tol;
}

Eigen::VectorXd StarShapedSet::sample_uniform(Rng& rng) const {
  for (;;) {
    Eigen::VectorXd x = sample_ball(rng, dim_, outer_);
    if (contains(x, 0.0)) return x;
  }
}

std::string StarShapedSet::spec() const { return spec_; }

StarShapedSet parse_star_set(const std::string& spec) {
  std::vector<std::string> parts = split(spec, ':');
  std::optional<double> eta;
  if (!parts.empty() && parts.back().rfind("eta=", 0) == 0) {
    eta = parse_double(parts.back().substr(4), spec);
    parts.pop_back();
  }
  require(!parts.empty(), ErrorCode::kParse, "empty star set spec");
  auto apply = [&](StarShapedSet s) { return eta ? s.with_eta(*eta) : s; };
  const std::string& kind = parts[0];
  if (kind == "ball") {
    require(parts.size() == 3, ErrorCode::kParse, fmt::format("star set spec '{}': expected ball:D:L", spec));
    return apply(StarShapedSet::ball(parse_uint(parts[1], spec), parse_double(parts[2], spec)));
  }
  if (kind == "random") {
    require(parts.size() == 3 || parts.size() == 5, ErrorCode::kParse,
            fmt::format("star set spec '{}': expected random:V:seed[:r_min:r_max]", spec));
    const double lo = parts.size() == 5 ? parse_double(parts[3], spec) : 0.5;
    const double hi = parts.size() == 5 ? parse_double(parts[4], spec) : 1.5;
    return apply(StarShapedSet::random_polygon(parse_uint(parts[1], spec), parse_uint(parts[2], spec), lo, hi));
  }
  if (kind == "polygon") {
    require(parts.size() == 2, ErrorCode::kParse,
            fmt::format("star set spec '{}': expected polygon:x1,y1;x2,y2;...", spec));
    std::vector<Eigen::Vector2d> pts;
    for (const auto& v : split(parts[1], ';')) {
      const auto xy = split(v, ',');
      require(xy.size() == 2, ErrorCode::kParse, fmt::format("star set spec '{}': bad vertex '{}'", spec, v));
      pts.emplace_back(parse_double(xy[0], spec), parse_double(xy[1], spec));
    }
    return apply(StarShapedSet::polygon(std::move(pts)));
  }
  fail(ErrorCode::kParse, fmt::format("unknown star set kind '{}' (expected ball, random or polygon)", kind));
}

Eigen::VectorXd expand_map(const StarShapedSet& s, const Eigen::VectorXd& x) {
  require(static_cast<std::size_t>(x.size()) == s.dim(), ErrorCode::kShape, "expand_map: point has wrong dimension");
  const double n = x.norm();
  const double h = s.delta() / 2;
  if (n <= h) return x;
  const double r = s.radial(x);
  require(n <= r + 1e-9, ErrorCode::kDomain,
          fmt::format("expand_map: point with norm {} lies outside the set (R(x) = {})", n, r));
  const double L = s.outer_radius();
  return (h + (L - h) / (r - h) * (n - h)) / n * x;
}

Eigen::VectorXd expand_map_inverse(const StarShapedSet& s, const Eigen::VectorXd& y) {
  require(static_cast<std::size_t>(y.size()) == s.dim(), ErrorCode::kShape,
          "expand_map_inverse: point has wrong dimension");
  const double n = y.norm();
  const double L = s.outer_radius();
  require(n <= L + 1e-9, ErrorCode::kDomain,
          fmt::format("expand_map_inverse: point with norm {} lies outside B[0, {}]", n, L));
  const double h = s.delta() / 2;
  if (n <= h) return y;
  const double r = s.radial(y);
  return (h + (r - h) / (L - h) * (n - h)) / n * y;
}

BilipschitzAudit bilipschitz_audit(const StarShapedSet& s, std::size_t n_pairs, std::uint64_t seed) {
  Rng rng(seed);
  BilipschitzAudit out;
  const double L = s.outer_radius();
  const auto dim = s.dim();
  auto near = [&](const Eigen::VectorXd& x, auto&& inside) {
    for (;;) {
      Eigen::VectorXd y = x + sample_ball(rng, dim, 1e-3 * L);
      if (inside(y)) return y;
    }
  };
  auto in_set = [&](const Eigen::VectorXd& y) { return s.contains(y, 0.0); };
  auto in_ball = [&](const Eigen::VectorXd& y) { return y.norm() <= L; };
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const bool local = i % 2 == 1;
    const Eigen::VectorXd x = s.sample_uniform(rng);
    const Eigen::VectorXd y = local ? near(x, in_set) : s.sample_uniform(rng);
    const double dx = (x - y).norm();
    if (dx > 0) out.lip_forward = std::max(out.lip_forward, (expand_map(s, x) - expand_map(s, y)).norm() / dx);
    const Eigen::VectorXd a = sample_ball(rng, dim, L);
    const Eigen::VectorXd b = local ? near(a, in_ball) : sample_ball(rng, dim, L);
    const double da = (a - b).norm();
    if (da > 0)
      out.lip_inverse = std::max(out.lip_inverse, (expand_map_inverse(s, a) - expand_map_inverse(s, b)).norm() / da);
  }
  out.pairs = n_pairs;
  return out;
}

}  // namespace mgl
