#include "mgl/mgl.h"

#include "mgl/error.hpp"
#include "mgl/net_builders.hpp"
#include "mgl/relu_net.hpp"
#include "mgl/runner.hpp"
#include "mgl/wasserstein.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct mgl_network {
  mgl::ReluNetwork net;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

template <class F>
int guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MGL_OK;
  } catch (const mgl::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const json::exception& e) {
    g_last_error = fmt::format("malformed JSON: {}", e.what());
    return MGL_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MGL_ERR_CAPACITY;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MGL_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  mgl::require(p != nullptr, mgl::ErrorCode::kParameter, fmt::format("{} must not be null", what));
}

int run(const char* name, const char* config_json, char** out_json) {
  return guarded([&] {
    need(config_json, "config_json");
    need(out_json, "out_json");
    *out_json = nullptr;
    const json cfg = json::parse(config_json);
    *out_json = dup_string(mgl::run_experiment(name, cfg).dump(2));
  });
}

double field(const json& spec, const char* key) {
  mgl::require(spec.contains(key) && spec[key].is_number(), mgl::ErrorCode::kParse,
               fmt::format("network spec: numeric field '{}' is required", key));
  return spec[key].get<double>();
}

mgl::ReluNetwork build_from_spec(const json& spec) {
  mgl::require(spec.is_object() && spec.contains("builder") && spec["builder"].is_string(), mgl::ErrorCode::kParse,
               "network spec: 'builder' is required");
  const std::string b = spec["builder"].get<std::string>();
  if (b == "times") return mgl::build_times(field(spec, "A"), field(spec, "eps")).net;
  if (b == "times_d")
    return mgl::build_times_d(static_cast<std::size_t>(field(spec, "d")), field(spec, "M"), field(spec, "eps")).net;
  if (b == "indicator")
    return mgl::build_indicator(field(spec, "a"), field(spec, "b"), field(spec, "eps"), field(spec, "M")).net;
  if (b == "cube_indicator") {
    mgl::Cube cube{spec.at("lower").get<std::vector<double>>(), spec.at("upper").get<std::vector<double>>()};
    return mgl::build_cube_indicator(cube, field(spec, "eps"), field(spec, "M")).net;
  }
  if (b == "identity")
    return mgl::identity_gadget(static_cast<std::size_t>(field(spec, "dim")),
                                static_cast<std::size_t>(field(spec, "depth")));
  mgl::fail(mgl::ErrorCode::kParameter, fmt::format("unknown builder '{}'", b));
}

}  // namespace

extern "C" {

const char* mgl_version(void) { return "1.0.0"; }

const char* mgl_last_error(void) { return g_last_error.c_str(); }

const char* mgl_status_name(int status) {
  return mgl::error_code_name(static_cast<mgl::ErrorCode>(status));
}

void mgl_free_string(char* s) { std::free(s); }

int mgl_run_build_approx(const char* c, char** o) { return run("build-approx", c, o); }
int mgl_run_transport_check(const char* c, char** o) { return run("transport-check", c, o); }
int mgl_run_rate_sweep(const char* c, char** o) { return run("rate-sweep", c, o); }
int mgl_run_end_to_end(const char* c, char** o) { return run("end-to-end", c, o); }
int mgl_run_starshape_audit(const char* c, char** o) { return run("starshape-audit", c, o); }

int mgl_network_build(const char* spec_json, mgl_network** out) {
  return guarded([&] {
    need(spec_json, "spec_json");
    need(out, "out");
    *out = nullptr;
    *out = new mgl_network{build_from_spec(json::parse(spec_json))};
  });
}

int mgl_network_parse(const char* serialized, mgl_network** out) {
  return guarded([&] {
    need(serialized, "serialized");
    need(out, "out");
    *out = nullptr;
    *out = new mgl_network{mgl::deserialize(serialized)};
  });
}

int mgl_network_serialize(const mgl_network* net, char** out) {
  return guarded([&] {
    need(net, "net");
    need(out, "out");
    *out = dup_string(mgl::serialize(net->net));
  });
}

int mgl_network_dims(const mgl_network* net, size_t* input_dim, size_t* output_dim) {
  return guarded([&] {
    need(net, "net");
    if (input_dim) *input_dim = net->net.input_dim();
    if (output_dim) *output_dim = net->net.output_dim();
  });
}

int mgl_network_metrics(const mgl_network* net, size_t* depth, size_t* width, double* weight_bound) {
  return guarded([&] {
    need(net, "net");
    const auto& m = net->net.metrics();
    if (depth) *depth = m.depth;
    if (width) *width = m.width;
    if (weight_bound) *weight_bound = m.weight_bound;
  });
}

int mgl_network_evaluate(const mgl_network* net, const double* x, size_t n_points, double* y) {
  return guarded([&] {
    need(net, "net");
    need(x, "x");
    need(y, "y");
    const auto in = static_cast<Eigen::Index>(net->net.input_dim());
    const auto outd = static_cast<Eigen::Index>(net->net.output_dim());
    const auto n = static_cast<Eigen::Index>(n_points);
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::MatrixXd pts = Eigen::Map<const RowMat>(x, n, in);
    Eigen::Map<RowMat>(y, n, outd) = net->net.evaluate_batch(pts);
  });
}

void mgl_network_free(mgl_network* net) { delete net; }

int mgl_w1_exact(const double* a, size_t n, const double* b, size_t m, size_t dim, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto d = static_cast<Eigen::Index>(dim);
    mgl::EmpiricalMeasure mu{Eigen::Map<const RowMat>(a, static_cast<Eigen::Index>(n), d)};
    mgl::EmpiricalMeasure nu{Eigen::Map<const RowMat>(b, static_cast<Eigen::Index>(m), d)};
    *out = mgl::w1_exact(mu, nu);
  });
}

}  // extern "C"
