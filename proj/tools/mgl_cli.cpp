// Command-line front end. Talks to the library only through mgl.h.
#include "mgl/mgl.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

enum class Kind { kText, kReal, kCount, kList };

struct Flag {
  const char* name;  // also the config key
  Kind kind;
  const char* help;
};

struct Command {
  const char* name;
  const char* help;
  int (*run)(const char*, char**);
  std::vector<Flag> flags;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"build-approx",
       "Build a ReLU approximation of a Holder function and its budget ledger",
       mgl_run_build_approx,
       {{"func", Kind::kText, "sqrt | power:p | sin:k | abs:c | prod:d"},
        {"alpha", Kind::kReal, "Holder exponent to use (<= the function's own)"},
        {"eps", Kind::kReal, "target L1 accuracy"},
        {"M", Kind::kReal, "builder weight scale (>= 2)"},
        {"seed", Kind::kCount, "master seed"},
        {"mc-samples", Kind::kCount, "Monte Carlo points for the measured error"},
        {"out", Kind::kText, "network file; the ledger goes to <stem>.budget.json"}}},
      {"transport-check",
       "Pushforward W1 of the oracle transport against direct density samples",
       mgl_run_transport_check,
       {{"manifold", Kind::kText, "circle:R | sphere:R | torus:d:R [:embed:D:seed]"},
        {"density", Kind::kText, "uniform | cosine:a"},
        {"n", Kind::kCount, "sample size"},
        {"seed", Kind::kCount, "master seed"},
        {"mc-samples", Kind::kCount, "Monte Carlo samples for chart normalizers"},
        {"w1-cap", Kind::kCount, "exact-W1 size cap"},
        {"out", Kind::kText, "report file"}}},
      {"rate-sweep",
       "Empirical W1 convergence rate with a log-log slope fit",
       mgl_run_rate_sweep,
       {{"manifold", Kind::kText, "manifold spec"},
        {"density", Kind::kText, "density spec"},
        {"ns", Kind::kList, "comma-separated sample sizes, strictly increasing"},
        {"reps", Kind::kCount, "replicates per sample size (>= 3)"},
        {"ref-mult", Kind::kCount, "reference size = ref-mult * max n"},
        {"seed", Kind::kCount, "master seed"},
        {"noise-sigma", Kind::kReal, "isotropic Gaussian noise level (noisy sweep)"},
        {"w1-cap", Kind::kCount, "exact-W1 size cap"},
        {"out", Kind::kText, "CSV table; also writes <stem>.summary.json and <stem>.svg"}}},
      {"end-to-end",
       "Oracle transport -> ReLU generator -> W1 against the target",
       mgl_run_end_to_end,
       {{"manifold", Kind::kText, "manifold spec (intrinsic dimension 1 or 2)"},
        {"density", Kind::kText, "density spec"},
        {"eps", Kind::kReal, "target accuracy in (0,1)"},
        {"seed", Kind::kCount, "master seed"},
        {"n-eval", Kind::kCount, "evaluation sample size"},
        {"reps", Kind::kCount, "evaluation replicates"},
        {"alpha", Kind::kReal, "Holder exponent assumed for chart maps"},
        {"max-width", Kind::kCount, "refuse generators wider than this"},
        {"mc-samples", Kind::kCount, "Monte Carlo samples for chart normalizers"},
        {"l1-samples", Kind::kCount, "Monte Carlo samples for the L1 report"},
        {"out", Kind::kText, "report file"}}},
      {"starshape-audit",
       "Audit the star-shape expansion map and its inverse",
       mgl_run_starshape_audit,
       {{"set", Kind::kText, "ball:D:L | random:V:seed | polygon:x,y;x,y;... [:eta=v]"},
        {"n-pairs", Kind::kCount, "pairs for the Lipschitz audit"},
        {"n-points", Kind::kCount, "points for round-trip checks"},
        {"seed", Kind::kCount, "master seed"},
        {"out", Kind::kText, "report file"}}},
  };
  return list;
}

json convert(const Flag& f, const std::string& raw) {
  switch (f.kind) {
    case Kind::kText:
    case Kind::kList:
      return raw;
    case Kind::kReal: {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (used != raw.size()) throw CLI::ValidationError(f.name, "not a number: " + raw);
      return v;
    }
    case Kind::kCount: {
      std::size_t used = 0;
      if (!raw.empty() && raw[0] == '-') throw CLI::ValidationError(f.name, "must be nonnegative: " + raw);
      const unsigned long long v = std::stoull(raw, &used);
      if (used != raw.size()) throw CLI::ValidationError(f.name, "not an integer: " + raw);
      return v;
    }
  }
  return raw;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manifold generative-model laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mgl_version()));
  bool compact = false;

  struct Parsed {
    const Command* cmd;
    CLI::App* sub;
    std::string config;
    std::map<std::string, std::string> values;
  };
  std::vector<Parsed> parsed(commands().size());
  for (std::size_t i = 0; i < commands().size(); ++i) {
    const Command& c = commands()[i];
    Parsed& p = parsed[i];
    p.cmd = &c;
    p.sub = app.add_subcommand(c.name, c.help);
    p.sub->add_option("--config", p.config, "JSON config; flags override its fields")->check(CLI::ExistingFile);
    p.sub->add_flag("--compact", compact, "print the report on one line");
    for (const Flag& f : c.flags) {
      const std::string name = std::string(std::strlen(f.name) == 1 ? "-" : "--") + f.name;
      p.sub->add_option(name, p.values[f.name], f.help);
    }
  }
  // CLI11 has no one-letter long options; accept --n / --M as -n / -M.
  std::vector<std::string> args(argv, argv + argc);
  for (auto& a : args)
    for (const char* one : {"n", "M"})
      if (a == std::string("--") + one || a.rfind(std::string("--") + one + "=", 0) == 0) a.erase(0, 1);
  std::vector<char*> argv2;
  for (auto& a : args) argv2.push_back(a.data());
  CLI11_PARSE(app, static_cast<int>(argv2.size()), argv2.data());

  for (const Parsed& p : parsed) {
    if (!p.sub->parsed()) continue;
    json config = json::object();
    try {
      if (!p.config.empty()) {
        std::ifstream in(p.config);
        config = json::parse(in);
      }
      for (const Flag& f : p.cmd->flags) {
        const std::string name = std::string(std::strlen(f.name) == 1 ? "-" : "--") + f.name;
        if (p.sub->count(name) > 0) config[f.name] = convert(f, p.values.at(f.name));
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return MGL_ERR_PARSE;
    }
    char* out = nullptr;
    const int status = p.cmd->run(config.dump().c_str(), &out);
    if (status != MGL_OK) {
      std::cerr << "error (" << mgl_status_name(status) << "): " << mgl_last_error() << "\n";
      return status;
    }
    std::cout << (compact ? json::parse(out).dump() : std::string(out)) << "\n";
    mgl_free_string(out);
    return 0;
  }
  return 0;
}
