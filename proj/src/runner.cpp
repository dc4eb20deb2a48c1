#include "mgl/runner.hpp"

#include "mgl/error.hpp"
#include "mgl/experiments.hpp"
#include "mgl/relu_net.hpp"

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace mgl {

namespace {

using nlohmann::json;

// Typed access to a config document; rejects unknown keys so typos surface.
class Config {
 public:
  Config(const json& doc, std::set<std::string> allowed) : doc_(doc) {
    require(doc.is_object(), ErrorCode::kParse, "config must be a JSON object");
    for (const auto& [key, _] : doc.items())
      require(allowed.count(key) > 0, ErrorCode::kParse, fmt::format("unknown config key '{}'", key));
  }

  bool has(const std::string& key) const { return doc_.contains(key) && !doc_[key].is_null(); }

  std::string str(const std::string& key) const {
    require(has(key), ErrorCode::kParse, fmt::format("config key '{}' is required", key));
    return get<std::string>(key);
  }
  std::string str(const std::string& key, const std::string& fallback) const {
    return has(key) ? get<std::string>(key) : fallback;
  }
  double num(const std::string& key, double fallback) const { return has(key) ? get<double>(key) : fallback; }
  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const double v = get<double>(key);
    require(v >= 0 && v == std::floor(v), ErrorCode::kParse,
            fmt::format("config key '{}' must be a nonnegative integer", key));
    return static_cast<std::size_t>(v);
  }
  std::uint64_t seed() const {
    if (!has("seed")) return 0;
    require(doc_["seed"].is_number_unsigned() || (doc_["seed"].is_number_integer() && doc_["seed"].get<long long>() >= 0),
            ErrorCode::kParse, "config key 'seed' must be a nonnegative integer");
    return doc_["seed"].get<std::uint64_t>();
  }
  // Array of integers or a comma-separated string.
  std::vector<std::size_t> counts(const std::string& key) const {
    require(has(key), ErrorCode::kParse, fmt::format("config key '{}' is required", key));
    std::vector<std::size_t> out;
    const json& v = doc_[key];
    if (v.is_string()) {
      std::stringstream in(v.get<std::string>());
      std::string part;
      while (std::getline(in, part, ',')) {
        try {
          std::size_t used = 0;
          out.push_back(std::stoul(part, &used));
          require(used == part.size(), ErrorCode::kParse, "");
        } catch (const std::exception&) {
          fail(ErrorCode::kParse, fmt::format("config key '{}': '{}' is not an integer", key, part));
        }
      }
    } else {
      require(v.is_array(), ErrorCode::kParse, fmt::format("config key '{}' must be a list", key));
      for (const auto& e : v) {
        require(e.is_number_unsigned(), ErrorCode::kParse,
                fmt::format("config key '{}' must list nonnegative integers", key));
        out.push_back(e.get<std::size_t>());
      }
    }
    return out;
  }

 private:
  template <class T>
  T get(const std::string& key) const {
    try {
      return doc_[key].get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::kParse, fmt::format("config key '{}' has the wrong type", key));
    }
  }
  const json& doc_;
};

void write_file(const std::filesystem::path& path, const std::string& text, json& files) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  out.close();
  require(out.good(), ErrorCode::kIo, fmt::format("failed writing '{}'", path.string()));
  files.push_back(path.string());
}

std::filesystem::path sibling(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  p.replace_extension(suffix);
  return p;
}

json run_build_approx(const json& doc) {
  const Config c(doc, {"func", "alpha", "eps", "M", "seed", "mc-samples", "out"});
  BuildApproxConfig cfg;
  cfg.func = c.str("func");
  if (c.has("alpha")) cfg.alpha = c.num("alpha", 1.0);
  cfg.eps = c.num("eps", cfg.eps);
  cfg.M = c.num("M", cfg.M);
  cfg.seed = c.seed();
  cfg.mc_samples = c.count("mc-samples", cfg.mc_samples);
  const BuildApproxResult res = build_approx(cfg);
  json out = {{"budget", res.budget}};
  if (c.has("out")) {
    json files = json::array();
    write_file(c.str("out"), serialize(res.net), files);
    write_file(sibling(c.str("out"), ".budget.json"), res.budget.dump(2) + "\n", files);
    out["files"] = files;
  } else {
    out["network"] = json::parse(serialize(res.net));
  }
  return out;
}

RateSweepConfig rate_config(const Config& c) {
  RateSweepConfig cfg;
  cfg.manifold = c.str("manifold");
  cfg.density = c.str("density", cfg.density);
  cfg.ns = c.counts("ns");
  cfg.replicates = c.count("reps", cfg.replicates);
  cfg.ref_multiplier = c.count("ref-mult", cfg.ref_multiplier);
  cfg.seed = c.seed();
  if (c.has("noise-sigma")) cfg.noise_sigma = c.num("noise-sigma", 0.0);
  cfg.w1_cap = c.count("w1-cap", cfg.w1_cap);
  return cfg;
}

json run_rate_sweep(const json& doc) {
  const Config c(doc, {"manifold", "density", "ns", "reps", "ref-mult", "seed", "noise-sigma", "w1-cap", "out"});
  const RateSweepConfig cfg = rate_config(c);
  RateTable table;
  json summary;
  if (cfg.noise_sigma) {
    const NoisyReport rep = noisy_sweep(cfg);
    table = rep.table;
    summary = rate_table_summary(table, cfg);
    summary["table_w1"] = "W1(noisy sample, reference)";
    summary["noise"] = to_json(rep);
  } else {
    table = rate_sweep(cfg);
    summary = rate_table_summary(table, cfg);
    summary["table_w1"] = "W1(sample, reference)";
  }
  json out = {{"summary", summary}};
  if (c.has("out")) {
    json files = json::array();
    const std::string title = fmt::format("{} / {}: W1 vs n", cfg.manifold, cfg.density);
    write_file(c.str("out"), rate_table_csv(table), files);
    write_file(sibling(c.str("out"), ".summary.json"), summary.dump(2) + "\n", files);
    write_file(sibling(c.str("out"), ".svg"), rate_table_svg(table, title), files);
    out["files"] = files;
  } else {
    out["csv"] = rate_table_csv(table);
  }
  return out;
}

json run_end_to_end(const json& doc) {
  const Config c(doc, {"manifold", "density", "eps", "seed", "n-eval", "reps", "alpha", "max-width", "mc-samples",
                       "l1-samples", "out"});
  EndToEndConfig cfg;
  cfg.manifold = c.str("manifold");
  cfg.density = c.str("density");
  cfg.eps = c.num("eps", cfg.eps);
  cfg.seed = c.seed();
  cfg.n_eval = c.count("n-eval", cfg.n_eval);
  cfg.replicates = c.count("reps", cfg.replicates);
  cfg.alpha = c.num("alpha", cfg.alpha);
  cfg.max_width = c.count("max-width", cfg.max_width);
  cfg.mc_samples = c.count("mc-samples", cfg.mc_samples);
  cfg.l1_samples = c.count("l1-samples", cfg.l1_samples);
  json report = end_to_end(cfg).details;
  if (c.has("out")) {
    json files = json::array();
    write_file(c.str("out"), report.dump(2) + "\n", files);
    report["files"] = files;
  }
  return report;
}

json run_transport_check(const json& doc) {
  const Config c(doc, {"manifold", "density", "n", "seed", "mc-samples", "w1-cap", "out"});
  TransportCheckConfig cfg;
  cfg.manifold = c.str("manifold");
  cfg.density = c.str("density", "uniform");
  cfg.n = c.count("n", cfg.n);
  cfg.seed = c.seed();
  cfg.mc_samples = c.count("mc-samples", cfg.mc_samples);
  cfg.w1_cap = c.count("w1-cap", cfg.w1_cap);
  json report = transport_check(cfg);
  if (c.has("out")) {
    json files = json::array();
    write_file(c.str("out"), report.dump(2) + "\n", files);
    report["files"] = files;
  }
  return report;
}

json run_starshape_audit(const json& doc) {
  const Config c(doc, {"set", "n-pairs", "n-points", "seed", "out"});
  StarshapeAuditConfig cfg;
  cfg.set = c.str("set");
  cfg.n_pairs = c.count("n-pairs", cfg.n_pairs);
  cfg.n_points = c.count("n-points", cfg.n_points);
  cfg.seed = c.seed();
  json report = starshape_audit(cfg);
  if (c.has("out")) {
    json files = json::array();
    write_file(c.str("out"), report.dump(2) + "\n", files);
    report["files"] = files;
  }
  return report;
}

}  // namespace

std::vector<std::string> experiment_names() {
  return {"build-approx", "transport-check", "rate-sweep", "end-to-end", "starshape-audit"};
}

json run_experiment(const std::string& name, const json& config) {
  if (name == "build-approx") return run_build_approx(config);
  if (name == "transport-check") return run_transport_check(config);
  if (name == "rate-sweep") return run_rate_sweep(config);
  if (name == "end-to-end") return run_end_to_end(config);
  if (name == "starshape-audit") return run_starshape_audit(config);
  fail(ErrorCode::kParameter, fmt::format("unknown experiment '{}'", name));
}

}  // namespace mgl
