#include "mgl/experiments.hpp"

#include "mgl/error.hpp"
#include "mgl/manifold.hpp"
#include "mgl/rng.hpp"
#include "mgl/starshape.hpp"
#include "mgl/transport.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

namespace mgl {

namespace {

using nlohmann::json;

std::uint64_t stream_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
  return derive_seed(master, stream_id(tag), index);
}

// Row seed for replicate r at sample size n.
std::uint64_t row_seed(std::uint64_t master, std::size_t n, std::size_t r) {
  return stream_seed(master, "sample", (static_cast<std::uint64_t>(n) << 20) | r);
}

MeanSe mean_se(std::vector<double> values) {
  MeanSe out;
  const double k = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / k;
  double ss = 0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.se = values.size() > 1 ? std::sqrt(ss / (k - 1) / k) : 0.0;
  out.values = std::move(values);
  return out;
}

json to_json(const MeanSe& m) { return {{"mean", m.mean}, {"se", m.se}, {"values", m.values}}; }

json to_json(const NetworkMetrics& m) {
  return {{"depth", m.depth}, {"width", m.width}, {"weight_bound", m.weight_bound}};
}

json to_json(const McValue& v) { return {{"mean", v.mean}, {"half_width_99", v.half_width}}; }

EmpiricalMeasure reference_draw(const ManifoldDensity& q, const RateSweepConfig& cfg) {
  return sample_density(q, stream_seed(cfg.seed, "reference"), cfg.ref_multiplier * cfg.ns.back());
}

double w1_with(const EmpiricalMeasure& a, const EmpiricalMeasure& b, std::size_t cap, std::uint64_t seed,
               std::string* resampling = nullptr) {
  const W1Result r = w1_exact_report(a, b, {.cap = cap, .seed = seed});
  if (resampling && resampling->empty()) *resampling = r.resampling;
  return r.value;
}

}  // namespace

void RateSweepConfig::validate() const {
  require(!manifold.empty(), ErrorCode::kParameter, "rate sweep: manifold spec is required");
  require(ns.size() >= 3, ErrorCode::kParameter, "rate sweep: need at least 3 sample sizes to fit a slope");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    require(ns[i] >= 2, ErrorCode::kParameter, "rate sweep: sample sizes must be at least 2");
    require(i == 0 || ns[i] > ns[i - 1], ErrorCode::kParameter, "rate sweep: sample sizes must be strictly increasing");
    require(ns[i] <= w1_cap, ErrorCode::kCapacity,
            fmt::format("rate sweep: n = {} exceeds the exact-W1 cap {}", ns[i], w1_cap));
  }
  require(replicates >= 3, ErrorCode::kParameter, "rate sweep: need at least 3 replicates");
  require(ref_multiplier >= 1, ErrorCode::kParameter, "rate sweep: reference multiplier must be positive");
  if (noise_sigma)
    require(*noise_sigma >= 0 && std::isfinite(*noise_sigma), ErrorCode::kParameter,
            "rate sweep: noise sigma must be nonnegative");
}

SlopeFit fit_slope(const std::vector<RateRow>& rows) {
  std::map<std::size_t, std::pair<double, std::size_t>> by_n;
  for (const auto& r : rows) {
    auto& [sum, count] = by_n[r.n];
    sum += r.w1;
    ++count;
  }
  require(by_n.size() >= 3, ErrorCode::kFit, "fit_slope: need at least 3 distinct sample sizes");
  std::vector<double> xs, ys;
  for (const auto& [n, acc] : by_n) {
    const double mean = acc.first / static_cast<double>(acc.second);
    require(mean > 0, ErrorCode::kFit, fmt::format("fit_slope: mean W1 at n = {} is not positive", n));
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(mean));
  }
  const double k = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - fit.intercept - fit.slope * xs[i];
    ssr += e * e;
  }
  fit.stderr_slope = std::sqrt(ssr / (k - 2) / sxx);
  return fit;
}

RateTable rate_sweep(const RateSweepConfig& cfg) {
  cfg.validate();
  const ManifoldDensity q = parse_density(parse_manifold(cfg.manifold), cfg.density);
  const EmpiricalMeasure ref = reference_draw(q, cfg);
  RateTable table;
  table.reference_size = ref.size();
  for (std::size_t n : cfg.ns)
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      const std::uint64_t s = row_seed(cfg.seed, n, r);
      const EmpiricalMeasure sample = sample_density(q, s, n);
      table.rows.push_back({n, r, w1_with(sample, ref, cfg.w1_cap, stream_seed(s, "w1"), &table.resampling), s});
    }
  const std::size_t top = cfg.ns.back();
  table.reference_floor = w1_with(sample_density(q, stream_seed(cfg.seed, "floor", 0), top),
                                  sample_density(q, stream_seed(cfg.seed, "floor", 1), top), cfg.w1_cap, 0);
  table.fit = fit_slope(table.rows);
  return table;
}

NoisyReport noisy_sweep(const RateSweepConfig& cfg) {
  cfg.validate();
  require(cfg.noise_sigma.has_value(), ErrorCode::kParameter, "noisy sweep: noise sigma is required");
  const double sigma = *cfg.noise_sigma;
  const ManifoldDensity q = parse_density(parse_manifold(cfg.manifold), cfg.density);
  const EmpiricalMeasure ref = reference_draw(q, cfg);
  NoisyReport rep;
  rep.sigma = sigma;
  rep.ambient_dim = q.manifold().ambient_dim();
  rep.sqrt_v = std::sqrt(static_cast<double>(rep.ambient_dim)) * sigma;
  rep.table.reference_size = ref.size();
  rep.every_ref_bound_holds = true;
  double sum = 0;
  for (std::size_t n : cfg.ns)
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      const std::uint64_t s = row_seed(cfg.seed, n, r);
      const EmpiricalMeasure clean = sample_density(q, s, n);
      EmpiricalMeasure noisy = clean;
      Rng rng(stream_seed(s, "noise"));
      for (Eigen::Index i = 0; i < noisy.points.rows(); ++i)
        for (Eigen::Index k = 0; k < noisy.points.cols(); ++k) noisy.points(i, k) += sigma * standard_normal(rng);
      // Same subsampling seed for both reference comparisons: both see the
      // same reference points.
      const std::uint64_t ws = stream_seed(s, "w1");
      NoisyRow row{n, r, s, w1_exact(clean, noisy), w1_with(clean, ref, cfg.w1_cap, ws, &rep.table.resampling),
                   w1_with(noisy, ref, cfg.w1_cap, ws)};
      rep.every_ref_bound_holds = rep.every_ref_bound_holds && row.noisy_ref <= row.clean_ref + 2 * rep.sqrt_v;
      sum += row.clean_noisy;
      rep.table.rows.push_back({n, r, row.noisy_ref, s});
      rep.rows.push_back(row);
    }
  rep.mean_clean_noisy = sum / static_cast<double>(rep.rows.size());
  rep.mean_bound_holds = rep.mean_clean_noisy <= rep.sqrt_v;
  const std::size_t top = cfg.ns.back();
  rep.table.reference_floor = w1_with(sample_density(q, stream_seed(cfg.seed, "floor", 0), top),
                                      sample_density(q, stream_seed(cfg.seed, "floor", 1), top), cfg.w1_cap, 0);
  rep.table.fit = fit_slope(rep.table.rows);
  return rep;
}

std::string rate_table_csv(const RateTable& table) {
  std::string out = "n,replicate,w1,seed\n";
  for (const auto& r : table.rows) out += fmt::format("{},{},{:.12g},{}\n", r.n, r.replicate, r.w1, r.seed);
  return out;
}

std::string rate_table_svg(const RateTable& table, const std::string& title) {
  constexpr double kW = 640, kH = 480, kLeft = 80, kRight = 30, kTop = 50, kBottom = 60;
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& r : table.rows) by_n[r.n].push_back(r.w1);
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& r : table.rows) {
    if (r.w1 <= 0) continue;
    x0 = std::min(x0, std::log10(static_cast<double>(r.n)));
    x1 = std::max(x1, std::log10(static_cast<double>(r.n)));
    y0 = std::min(y0, std::log10(r.w1));
    y1 = std::max(y1, std::log10(r.w1));
  }
  x0 = std::floor(x0 * 10) / 10 - 0.05;
  x1 = std::ceil(x1 * 10) / 10 + 0.05;
  y0 = std::floor(y0 * 10) / 10 - 0.05;
  y1 = std::ceil(y1 * 10) / 10 + 0.05;
  auto px = [&](double lx) { return kLeft + (lx - x0) / (x1 - x0) * (kW - kLeft - kRight); };
  auto py = [&](double ly) { return kH - kBottom - (ly - y0) / (y1 - y0) * (kH - kTop - kBottom); };
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kW, kH);
  svg += fmt::format("<text x=\"{}\" y=\"25\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", kW / 2, title);
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                     kTop, kW - kLeft - kRight, kH - kTop - kBottom);
  // Ticks at 1, 2, 5 times powers of ten that fall inside the range.
  for (int e = static_cast<int>(std::floor(std::min(x0, y0))) - 1; e <= static_cast<int>(std::ceil(std::max(x1, y1))); ++e)
    for (double m : {1.0, 2.0, 5.0}) {
      const double l = e + std::log10(m);
      const std::string label = fmt::format("{:g}", m * std::pow(10.0, e));
      if (l >= x0 && l <= x1)
        svg += fmt::format(
            "<line x1=\"{0:.1f}\" y1=\"{1}\" x2=\"{0:.1f}\" y2=\"{2}\" stroke=\"#ccc\"/>"
            "<text x=\"{0:.1f}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
            px(l), kTop, kH - kBottom, kH - kBottom + 18, label);
      if (l >= y0 && l <= y1)
        svg += fmt::format(
            "<line x1=\"{1}\" y1=\"{0:.1f}\" x2=\"{2}\" y2=\"{0:.1f}\" stroke=\"#ccc\"/>"
            "<text x=\"{3}\" y=\"{0:.1f}\" text-anchor=\"end\" dominant-baseline=\"middle\">{4}</text>\n",
            py(l), kLeft, kW - kRight, kLeft - 6, label);
    }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">n</text>\n", (kLeft + kW - kRight) / 2, kH - 20);
  svg += fmt::format("<text x=\"20\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {0})\">W1</text>\n",
                     (kTop + kH - kBottom) / 2);
  for (const auto& r : table.rows)
    if (r.w1 > 0)
      svg += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"2\" fill=\"#999\"/>\n",
                         px(std::log10(static_cast<double>(r.n))), py(std::log10(r.w1)));
  for (const auto& [n, vals] : by_n) {
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
    if (mean > 0)
      svg += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"4\" fill=\"black\"/>\n",
                         px(std::log10(static_cast<double>(n))), py(std::log10(mean)));
  }
  // Fitted line log w1 = intercept + slope log n, in base-10 coordinates.
  const double a = table.fit.intercept / std::log(10.0), b = table.fit.slope;
  const double lx0 = std::log10(static_cast<double>(by_n.begin()->first));
  const double lx1 = std::log10(static_cast<double>(by_n.rbegin()->first));
  svg += fmt::format(
      "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#c00\" stroke-width=\"2\"/>\n",
      px(lx0), py(a + b * lx0), px(lx1), py(a + b * lx1));
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\" fill=\"#c00\">slope {:.3f} ± {:.3f}</text>\n",
                     kW - kRight - 8, kTop + 18, table.fit.slope, table.fit.stderr_slope);
  svg += "</svg>\n";
  return svg;
}

json rate_table_summary(const RateTable& table, const RateSweepConfig& cfg) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& r : table.rows) by_n[r.n].push_back(r.w1);
  json per_n = json::array();
  for (auto& [n, vals] : by_n) {
    const MeanSe m = mean_se(vals);
    per_n.push_back({{"n", n}, {"mean_w1", m.mean}, {"se", m.se}});
  }
  json out = {{"manifold", cfg.manifold},
              {"density", cfg.density},
              {"ns", cfg.ns},
              {"reps", cfg.replicates},
              {"ref-mult", cfg.ref_multiplier},
              {"seed", cfg.seed},
              {"slope", table.fit.slope},
              {"slope_stderr", table.fit.stderr_slope},
              {"intercept", table.fit.intercept},
              {"reference_size", table.reference_size},
              {"reference_floor", table.reference_floor},
              {"reference_floor_n", cfg.ns.back()},
              {"w1_resampling", table.resampling},
              {"per_n", per_n},
              {"seed_rule", "row seed = derive_seed(seed, stream_id(\"sample\"), n << 20 | replicate)"}};
  if (cfg.noise_sigma) out["noise-sigma"] = *cfg.noise_sigma;
  return out;
}

json to_json(const NoisyReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"n", r.n},
                    {"replicate", r.replicate},
                    {"seed", r.seed},
                    {"w1_clean_noisy", r.clean_noisy},
                    {"w1_clean_ref", r.clean_ref},
                    {"w1_noisy_ref", r.noisy_ref}});
  return {{"sigma", report.sigma},
          {"ambient_dim", report.ambient_dim},
          {"sqrt_v", report.sqrt_v},
          {"mean_w1_clean_noisy", report.mean_clean_noisy},
          {"mean_bound_holds", report.mean_bound_holds},
          {"every_reference_bound_holds", report.every_ref_bound_holds},
          {"rows", rows}};
}

namespace {

// sup |f(x) - f(y)| / |x - y|^alpha over axis-aligned grid pairs at dyadic
// separations, on a grid of `per_axis` points per axis.
double estimate_holder_norm(const std::function<double(std::span<const double>)>& f, std::size_t d, double alpha,
                            std::size_t per_axis) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= per_axis;
  const double h = 1.0 / static_cast<double>(per_axis - 1);
  std::vector<double> values(total);
  std::vector<double> x(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = static_cast<double>(rest % per_axis) * h;
      rest /= per_axis;
    }
    values[idx] = f(x);
  }
  double best = 0;
  std::size_t stride = 1;
  for (std::size_t axis = 0; axis < d; ++axis, stride *= per_axis)
    for (std::size_t s = 1; s < per_axis; s *= 2)
      for (std::size_t idx = 0; idx < total; ++idx) {
        if ((idx / stride) % per_axis + s >= per_axis) continue;
        const double diff = std::abs(values[idx + s * stride] - values[idx]);
        best = std::max(best, diff / std::pow(static_cast<double>(s) * h, alpha));
      }
  return best;
}

struct ChartFunction {
  HolderFunction f;
  double estimated_norm = 0;
};

}  // namespace

EndToEndReport end_to_end(const EndToEndConfig& cfg) {
  require(cfg.eps > 0 && cfg.eps < 1, ErrorCode::kParameter, "end_to_end: eps must lie in (0, 1)");
  require(cfg.alpha > 0 && cfg.alpha <= 1, ErrorCode::kParameter, "end_to_end: alpha must lie in (0, 1]");
  require(cfg.n_eval >= 2 && cfg.replicates >= 2, ErrorCode::kParameter,
          "end_to_end: need n_eval >= 2 and at least 2 replicates");
  const ManifoldDensity q = parse_density(parse_manifold(cfg.manifold), cfg.density);
  const ChartedManifold& m = q.manifold();
  const std::size_t d = m.intrinsic_dim(), D = m.ambient_dim();
  require(d == 1 || d == 2, ErrorCode::kScope,
          fmt::format("end_to_end: oracle transports exist for d in {{1, 2}} only (got d = {})", d));

  const OracleTransport oracle = build_oracle_transport(q, stream_seed(cfg.seed, "oracle"), cfg.mc_samples);
  const GlobalTransport& g = oracle.transport;
  const std::size_t J = g.chart_count();
  const double M = std::max(2.0, m.bound() + 1.0);
  const GeneratorDeltas deltas = generator_deltas(cfg.eps, D, J, M);

  // Chart-coordinate functions u -> [exp_j(T_j(u))]_i on [0,1]^d.
  std::vector<std::vector<ChartFunction>> funcs(J);
  const std::size_t grid = d == 1 ? 4097 : 257;
  constexpr double kNormSafety = 1.1;
  double total_width = 0;
  std::size_t max_cells = 0;
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t i = 0; i < D; ++i) {
      ChartFunction cf;
      cf.f.evaluator = [&g, j, i](std::span<const double> u) { return g.chart_map(j, u)[static_cast<Eigen::Index>(i)]; };
      cf.f.dim = d;
      cf.f.alpha = cfg.alpha;
      cf.f.sup_bound = m.bound();
      cf.estimated_norm = estimate_holder_norm(cf.f.evaluator, d, cfg.alpha, grid);
      cf.f.holder_norm = std::max(kNormSafety * cf.estimated_norm, 1e-6);
      const auto cells = static_cast<std::size_t>(std::ceil(
          std::pow(2 * cf.f.holder_norm / deltas.delta3, 1 / cfg.alpha) * std::sqrt(static_cast<double>(d))));
      max_cells = std::max(max_cells, cells);
      total_width += 4.0 * static_cast<double>(d) * std::pow(static_cast<double>(cells), static_cast<double>(d));
      funcs[j].push_back(std::move(cf));
    }
  require(total_width <= static_cast<double>(cfg.max_width), ErrorCode::kCapacity,
          fmt::format("end_to_end: the generator would need about {:.3g} neurons per layer ({} cells per axis, d = "
                      "{}), above max-width {}; raise eps or max-width",
                      total_width, max_cells, d, cfg.max_width));

  std::vector<std::vector<ReluNetwork>> nets(J);
  json chart_json = json::array();
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t i = 0; i < D; ++i) {
      const HolderApproximation h = build_holder_approx(funcs[j][i].f, deltas.delta3, M);
      chart_json.push_back({{"chart", j},
                            {"coordinate", i},
                            {"holder_norm_estimate", funcs[j][i].estimated_norm},
                            {"holder_norm_used", funcs[j][i].f.holder_norm},
                            {"cells_per_axis", h.cells_per_axis},
                            {"metrics", to_json(h.built.net.metrics())},
                            {"claimed_depth", h.built.budget.claimed_depth_bound},
                            {"claimed_width", h.built.budget.claimed_width_bound},
                            {"depth_constant", holder_depth_constant(funcs[j][i].f, M)}});
      nets[j].push_back(h.built.net);
    }
  const AssembledGenerator gen =
      assemble_generator(nets, g.thresholds(), deltas.delta1, deltas.delta2, deltas.delta3, D, M);

  EndToEndReport rep;
  rep.metrics = gen.net.metrics();
  rep.l1_bound = gen.l1_bound;

  auto uniform_source = [&](std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    Eigen::MatrixXd u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d + 1));
    for (Eigen::Index r = 0; r < u.rows(); ++r)
      for (Eigen::Index c = 0; c < u.cols(); ++c) u(r, c) = uniform_open01(rng);
    return u;
  };
  auto oracle_image = [&](const Eigen::MatrixXd& u) {
    EmpiricalMeasure out;
    out.points.resize(u.rows(), static_cast<Eigen::Index>(D));
    std::vector<double> z(d + 1);
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      for (std::size_t c = 0; c <= d; ++c) z[c] = u(r, static_cast<Eigen::Index>(c));
      out.points.row(r) = g(z).transpose();
    }
    return out;
  };

  std::vector<double> gen_w, ctl_w, floor_w;
  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    const Eigen::MatrixXd u = uniform_source(stream_seed(cfg.seed, "source", r), cfg.n_eval);
    const EmpiricalMeasure pushed{gen.net.evaluate_batch(u)};
    const EmpiricalMeasure exact = oracle_image(u);
    gen_w.push_back(w1_exact(pushed, sample_density(q, stream_seed(cfg.seed, "direct-a", r), cfg.n_eval)));
    ctl_w.push_back(w1_exact(exact, sample_density(q, stream_seed(cfg.seed, "direct-b", r), cfg.n_eval)));
    floor_w.push_back(w1_exact(sample_density(q, stream_seed(cfg.seed, "floor-a", r), cfg.n_eval),
                               sample_density(q, stream_seed(cfg.seed, "floor-b", r), cfg.n_eval)));
  }
  rep.generator = mean_se(gen_w);
  rep.control = mean_se(ctl_w);
  rep.floor = mean_se(floor_w);

  {
    const Eigen::MatrixXd u = uniform_source(stream_seed(cfg.seed, "l1"), cfg.l1_samples);
    const Eigen::MatrixXd out = gen.net.evaluate_batch(u);
    const EmpiricalMeasure exact = oracle_image(u);
    double sum = 0, sum_sq = 0;
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      const double e = (out.row(r) - exact.points.row(r)).norm();
      sum += e;
      sum_sq += e * e;
    }
    const double n = static_cast<double>(cfg.l1_samples);
    rep.approximation.mean = sum / n;
    rep.approximation.half_width =
        2.5758293035489 * std::sqrt(std::max(0.0, (sum_sq / n - rep.approximation.mean * rep.approximation.mean)) / (n - 1));
    rep.approximation.samples = cfg.l1_samples;
  }

  rep.within_eps = rep.generator.mean <= cfg.eps + rep.floor.mean;
  rep.control_matches_floor =
      std::abs(rep.control.mean - rep.floor.mean) <= 3 * std::hypot(rep.control.se, rep.floor.se);
  rep.bias_variance_holds = rep.generator.mean <= rep.approximation.mean + rep.approximation.half_width +
                                                      2 * rep.floor.mean + 3 * rep.generator.se;

  std::set<std::string> methods;
  for (std::size_t j = 0; j < J; ++j) methods.insert(g.local(j).method());
  json masses = json::array(), etas = json::array();
  for (std::size_t j = 0; j < J; ++j) {
    masses.push_back(to_json(oracle.masses.chart_mass[j]));
    etas.push_back(to_json(oracle.masses.eta[j]));
  }
  const double log_inv = std::log2(1 / cfg.eps);
  rep.details = {
      {"manifold", m.spec()},
      {"density", q.spec()},
      {"eps", cfg.eps},
      {"seed", cfg.seed},
      {"n_eval", cfg.n_eval},
      {"replicates", cfg.replicates},
      {"intrinsic_dim", d},
      {"ambient_dim", D},
      {"charts", J},
      {"M", M},
      {"alpha_assumed", cfg.alpha},
      {"deltas", {{"delta1", deltas.delta1}, {"delta2", deltas.delta2}, {"delta3", deltas.delta3}}},
      {"thresholds", g.thresholds()},
      {"chart_mass", masses},
      {"eta_raw", etas},
      {"weights", g.weights()},
      {"transport", std::vector<std::string>(methods.begin(), methods.end())},
      {"chart_networks", chart_json},
      {"generator_metrics", to_json(rep.metrics)},
      {"ledger",
       {{"depth", rep.metrics.depth},
        {"depth_over_log2_inv_eps", static_cast<double>(rep.metrics.depth) / log_inv},
        {"width", rep.metrics.width},
        {"width_over_D_eps_pow", static_cast<double>(rep.metrics.width) /
                                     (static_cast<double>(D) * std::pow(cfg.eps, -static_cast<double>(d) / cfg.alpha))},
        {"l1_bound", rep.l1_bound}}},
      {"w1_generator", to_json(rep.generator)},
      {"w1_control", to_json(rep.control)},
      {"w1_floor", to_json(rep.floor)},
      {"approximation_l1", {{"mean", rep.approximation.mean},
                            {"half_width_99", rep.approximation.half_width},
                            {"samples", rep.approximation.samples}}},
      {"within_eps_plus_floor", rep.within_eps},
      {"control_matches_floor", rep.control_matches_floor},
      {"bias_variance_holds", rep.bias_variance_holds}};
  return rep;
}

json transport_check(const TransportCheckConfig& cfg) {
  require(cfg.n >= 2, ErrorCode::kParameter, "transport_check: need n >= 2");
  require(cfg.n <= cfg.w1_cap, ErrorCode::kCapacity,
          fmt::format("transport_check: n = {} exceeds the exact-W1 cap {}", cfg.n, cfg.w1_cap));
  const ManifoldDensity q = parse_density(parse_manifold(cfg.manifold), cfg.density);
  const OracleTransport oracle = build_oracle_transport(q, stream_seed(cfg.seed, "oracle"), cfg.mc_samples);
  const GlobalTransport& g = oracle.transport;
  const EmpiricalMeasure pushed = pushforward_sample(g, stream_seed(cfg.seed, "pushforward"), cfg.n);
  const EmpiricalMeasure direct = sample_density(q, stream_seed(cfg.seed, "direct"), cfg.n);
  const EmpiricalMeasure control = sample_density(q, stream_seed(cfg.seed, "control"), cfg.n);
  const W1Options opt{.cap = cfg.w1_cap, .seed = 0};
  std::set<std::string> methods;
  json masses = json::array(), etas = json::array();
  std::vector<std::size_t> occupancy(g.chart_count(), 0);
  {
    Rng rng(stream_seed(cfg.seed, "pushforward"));
    for (std::size_t i = 0; i < cfg.n; ++i) {
      const double x1 = uniform_open01(rng);
      for (std::size_t k = 0; k < g.source_dim() - 1; ++k) uniform_open01(rng);
      ++occupancy[g.select_chart(x1)];
    }
  }
  for (std::size_t j = 0; j < g.chart_count(); ++j) {
    methods.insert(g.local(j).method());
    masses.push_back(to_json(oracle.masses.chart_mass[j]));
    etas.push_back(to_json(oracle.masses.eta[j]));
  }
  return {{"manifold", q.manifold().spec()},
          {"density", q.spec()},
          {"n", cfg.n},
          {"seed", cfg.seed},
          {"mc_samples", cfg.mc_samples},
          {"charts", g.chart_count()},
          {"chart_mass", masses},
          {"eta_raw", etas},
          {"weights", g.weights()},
          {"thresholds", g.thresholds()},
          {"chart_occupancy", occupancy},
          {"transport", std::vector<std::string>(methods.begin(), methods.end())},
          {"w1_pushforward_vs_direct", w1_exact(pushed, direct, opt)},
          {"w1_floor_direct_vs_direct", w1_exact(control, direct, opt)}};
}

HolderFunction parse_holder_function(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto number = [&](double fallback) {
    if (arg.empty()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(arg, &used);
      if (used == arg.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::kParse, fmt::format("function spec '{}': bad parameter '{}'", spec, arg));
  };
  HolderFunction f;
  if (name == "sqrt" || name == "power") {
    const double p = name == "sqrt" ? 0.5 : number(1.0);
    require(p > 0, ErrorCode::kParameter, "power function needs a positive exponent");
    f.evaluator = [p](std::span<const double> x) { return std::pow(std::max(0.0, x[0]), p); };
    f.alpha = std::min(p, 1.0);
    f.holder_norm = std::max(p, 1.0);
  } else if (name == "sin") {
    const double k = number(1.0);
    f.evaluator = [k](std::span<const double> x) { return std::sin(2 * std::numbers::pi * k * x[0]); };
    f.holder_norm = 2 * std::numbers::pi * std::abs(k);
  } else if (name == "abs") {
    const double c = number(0.5);
    f.evaluator = [c](std::span<const double> x) { return std::abs(x[0] - c); };
    f.sup_bound = std::max(std::abs(c), std::abs(1 - c));
  } else if (name == "prod") {
    const double dd = number(2.0);
    require(dd >= 1 && dd == std::floor(dd), ErrorCode::kParameter, "prod:d needs a positive integer d");
    f.dim = static_cast<std::size_t>(dd);
    f.evaluator = [](std::span<const double> x) {
      double v = 1;
      for (double e : x) v *= e;
      return v;
    };
    f.holder_norm = std::sqrt(dd);
  } else {
    fail(ErrorCode::kParse, fmt::format("unknown function '{}' (expected sqrt, power:p, sin:k, abs:c, prod:d)", name));
  }
  return f;
}

BuildApproxResult build_approx(const BuildApproxConfig& cfg) {
  HolderFunction f = parse_holder_function(cfg.func);
  const double native = f.alpha;
  if (cfg.alpha) {
    require(*cfg.alpha > 0 && *cfg.alpha <= native, ErrorCode::kParameter,
            fmt::format("build_approx: alpha = {} exceeds the function's Holder exponent {}", *cfg.alpha, native));
    // |x-y|^native <= diam^(native-alpha) |x-y|^alpha on [0,1]^d, diam = sqrt(d).
    f.holder_norm *= std::pow(static_cast<double>(f.dim), (native - *cfg.alpha) / 2);
    f.alpha = *cfg.alpha;
  }
  const HolderApproximation h = build_holder_approx(f, cfg.eps, cfg.M);
  const McEstimate err = l1_distance_mc(h.built.net, f.evaluator, f.dim, 0.0, 1.0, cfg.mc_samples,
                                        stream_seed(cfg.seed, "l1"));
  const double c1 = holder_depth_constant(f, cfg.M), c2 = holder_width_constant(f);
  const NetworkMetrics& met = h.built.net.metrics();
  const double depth_ledger = c1 * std::log2(1 / cfg.eps);
  const double width_ledger = c2 * std::pow(cfg.eps, -static_cast<double>(f.dim) / f.alpha);
  const ApproxBudget& b = h.built.budget;
  json budget = {
      {"func", cfg.func},
      {"eps", cfg.eps},
      {"alpha", f.alpha},
      {"dim", f.dim},
      {"holder_norm", f.holder_norm},
      {"M", cfg.M},
      {"cells_per_axis", h.cells_per_axis},
      {"piecewise_bound", h.piecewise_bound},
      {"claimed",
       {{"depth", b.claimed_depth_bound},
        {"width", b.claimed_width_bound},
        {"weight_bound", b.claimed_weight_bound},
        {"depth_formula", b.depth_formula},
        {"width_formula", b.width_formula}}},
      {"ledger",
       {{"c1", c1},
        {"c2", c2},
        {"depth_bound", depth_ledger},
        {"width_bound", width_ledger},
        {"depth_ok", static_cast<double>(met.depth) <= depth_ledger},
        {"width_ok", static_cast<double>(met.width) <= width_ledger}}},
      {"measured", to_json(met)},
      {"claims_satisfied", b.satisfied_by(met)},
      {"error",
       {{"l1_mean", err.mean},
        {"half_width_99", err.half_width},
        {"samples", err.samples},
        {"below_eps", err.mean + err.half_width < cfg.eps}}}};
  return {h.built.net, std::move(budget)};
}

json starshape_audit(const StarshapeAuditConfig& cfg) {
  const StarShapedSet s = parse_star_set(cfg.set);
  const BilipschitzAudit audit = bilipschitz_audit(s, cfg.n_pairs, stream_seed(cfg.seed, "audit"));
  Rng rng(stream_seed(cfg.seed, "points"));
  const double L = s.outer_radius();
  const auto dim = static_cast<Eigen::Index>(s.dim());
  auto direction = [&] {
    Eigen::VectorXd u(dim);
    do {
      for (Eigen::Index i = 0; i < dim; ++i) u[i] = standard_normal(rng);
    } while (u.norm() == 0);
    return Eigen::VectorXd(u / u.norm());
  };
  double forward = 0, backward = 0, boundary = 0, inverse_boundary = 0;
  std::size_t fixed_violations = 0, outside = 0, monotone_violations = 0;
  for (std::size_t k = 0; k < cfg.n_points; ++k) {
    const Eigen::VectorXd x = s.sample_uniform(rng);
    forward = std::max(forward, (expand_map_inverse(s, expand_map(s, x)) - x).norm());
    const Eigen::VectorXd u = direction();
    const Eigen::VectorXd y = (L * std::pow(uniform01(rng), 1.0 / static_cast<double>(dim))) * u;
    const Eigen::VectorXd z = expand_map_inverse(s, y);
    if (!s.contains(z, 1e-8)) ++outside;
    backward = std::max(backward, (expand_map(s, z) - y).norm());
    const Eigen::VectorXd inner = (s.delta() / 2 * uniform01(rng)) * u;
    if (expand_map(s, inner) != inner || expand_map_inverse(s, inner) != inner) ++fixed_violations;
    const double r = s.radial(u);
    boundary = std::max(boundary, std::abs(expand_map(s, r * u).norm() - L));
    const Eigen::VectorXd back = expand_map_inverse(s, L * u);
    inverse_boundary = std::max(inverse_boundary, std::abs(back.norm() - r));
    if (k < 200) {
      double prev = -1;
      for (int t = 1; t <= 64; ++t) {
        const double nrm = expand_map(s, (r * t / 64.0) * u).norm();
        if (!(nrm > prev)) ++monotone_violations;
        prev = nrm;
      }
    }
  }
  json out = {{"set", s.spec()},
              {"dim", s.dim()},
              {"eta", s.eta()},
              {"delta", s.delta()},
              {"outer_radius", L},
              {"n_pairs", cfg.n_pairs},
              {"n_points", cfg.n_points},
              {"seed", cfg.seed},
              {"lip_forward", audit.lip_forward},
              {"lip_inverse", audit.lip_inverse},
              {"max_round_trip_forward", forward},
              {"max_round_trip_inverse", backward},
              {"max_boundary_to_sphere_error", boundary},
              {"max_sphere_to_boundary_error", inverse_boundary},
              {"fixed_region_violations", fixed_violations},
              {"inverse_images_outside_set", outside},
              {"ray_monotonicity_violations", monotone_violations}};
  if (s.is_polygon()) out["vertices"] = s.vertices().size();
  return out;
}

}  // namespace mgl
