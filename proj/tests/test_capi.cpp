// Exercises the shared library strictly through the C header.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mgl/mgl.h"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

struct Owned {
  char* s = nullptr;
  ~Owned() { mgl_free_string(s); }
  json doc() const { return json::parse(s); }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(mgl_version()) == "1.0.0");
  CHECK(std::string(mgl_status_name(MGL_OK)) == "ok");
  CHECK(std::string(mgl_status_name(MGL_ERR_CAPACITY)).size() > 0);
}

TEST_CASE("network handles: build, evaluate, serialize, parse") {
  mgl_network* net = nullptr;
  REQUIRE(mgl_network_build(R"({"builder": "times", "A": 1, "eps": 0.01})", &net) == MGL_OK);
  size_t in = 0, out = 0, depth = 0, width = 0;
  double kappa = 0;
  REQUIRE(mgl_network_dims(net, &in, &out) == MGL_OK);
  CHECK(in == 2);
  CHECK(out == 1);
  REQUIRE(mgl_network_metrics(net, &depth, &width, &kappa) == MGL_OK);
  CHECK(width <= 8);
  CHECK(kappa <= 1.0);
  std::vector<double> x, y(121);
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) {
      x.push_back(-1 + 0.2 * i);
      x.push_back(-1 + 0.2 * j);
    }
  REQUIRE(mgl_network_evaluate(net, x.data(), 121, y.data()) == MGL_OK);
  for (int k = 0; k < 121; ++k) CHECK(std::abs(y[k] - x[2 * k] * x[2 * k + 1]) <= 0.01);

  Owned text;
  REQUIRE(mgl_network_serialize(net, &text.s) == MGL_OK);
  mgl_network* copy = nullptr;
  REQUIRE(mgl_network_parse(text.s, &copy) == MGL_OK);
  std::vector<double> y2(121);
  REQUIRE(mgl_network_evaluate(copy, x.data(), 121, y2.data()) == MGL_OK);
  CHECK(y == y2);
  mgl_network_free(copy);
  mgl_network_free(net);
  mgl_network_free(nullptr);
}

TEST_CASE("errors map to status codes with a message") {
  mgl_network* net = nullptr;
  CHECK(mgl_network_build("{not json", &net) == MGL_ERR_PARSE);
  CHECK(std::string(mgl_last_error()).size() > 0);
  CHECK(net == nullptr);
  CHECK(mgl_network_build(R"({"builder": "times", "A": 1, "eps": -1})", &net) == MGL_ERR_PARAMETER);
  CHECK(mgl_network_build(R"({"builder": "nope"})", &net) == MGL_ERR_PARAMETER);
  CHECK(mgl_network_build(nullptr, &net) == MGL_ERR_PARAMETER);
  Owned out;
  CHECK(mgl_run_starshape_audit(R"({"set": "ball:2:1", "typo": 1})", &out.s) == MGL_ERR_PARSE);
  CHECK(std::string(mgl_last_error()).find("typo") != std::string::npos);
  CHECK(mgl_run_transport_check(R"({"manifold": "torus:3:1"})", &out.s) == MGL_ERR_SCOPE);
  CHECK(mgl_run_transport_check(R"({"manifold": "circle:1", "n": 5000})", &out.s) == MGL_ERR_CAPACITY);
  CHECK(mgl_run_rate_sweep(R"({"manifold": "circle:1", "ns": "64,32,128"})", &out.s) == MGL_ERR_PARAMETER);
  CHECK(out.s == nullptr);
  // A successful call clears the error message.
  REQUIRE(mgl_network_build(R"({"builder": "identity", "dim": 2, "depth": 3})", &net) == MGL_OK);
  CHECK(std::string(mgl_last_error()).empty());
  mgl_network_free(net);
}

TEST_CASE("exact W1 through the C API") {
  const double a[2] = {0, 0}, b[2] = {3, 4};
  double w = -1;
  REQUIRE(mgl_w1_exact(a, 1, b, 1, 2, &w) == MGL_OK);
  CHECK(w == 5.0);
  const double p[4] = {0, 0, 1, 0}, q[4] = {0, 1, 1, 1};
  REQUIRE(mgl_w1_exact(p, 2, q, 2, 2, &w) == MGL_OK);
  CHECK(w == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("experiments run through the C API and write their files") {
  const auto dir = std::filesystem::temp_directory_path() / "mgl_capi_test";
  std::filesystem::remove_all(dir);
  const std::string csv = (dir / "table.csv").string();
  const json cfg = {{"manifold", "circle:1"}, {"density", "cosine:2"}, {"ns", "32,64,128"},
                    {"reps", 3}, {"ref-mult", 2}, {"seed", 5}, {"out", csv}};
  Owned first, second;
  REQUIRE(mgl_run_rate_sweep(cfg.dump().c_str(), &first.s) == MGL_OK);
  const std::string bytes = slurp(csv);
  REQUIRE(mgl_run_rate_sweep(cfg.dump().c_str(), &second.s) == MGL_OK);
  CHECK(slurp(csv) == bytes);
  CHECK(bytes.rfind("n,replicate,w1,seed\n", 0) == 0);
  CHECK(std::filesystem::exists(dir / "table.summary.json"));
  CHECK(std::filesystem::exists(dir / "table.svg"));
  CHECK(first.doc()["files"].size() == 3);
  CHECK(json::parse(slurp(dir / "table.summary.json"))["reps"] == 3);

  Owned audit;
  REQUIRE(mgl_run_starshape_audit(R"({"set": "random:10:2", "n-pairs": 200, "n-points": 200})", &audit.s) == MGL_OK);
  CHECK(audit.doc()["vertices"] == 10);

  Owned approx;
  const json bcfg = {{"func", "sqrt"}, {"eps", 0.25}, {"mc-samples", 5000}, {"out", (dir / "net.json").string()}};
  REQUIRE(mgl_run_build_approx(bcfg.dump().c_str(), &approx.s) == MGL_OK);
  mgl_network* net = nullptr;
  REQUIRE(mgl_network_parse(slurp(dir / "net.json").c_str(), &net) == MGL_OK);
  size_t depth = 0;
  REQUIRE(mgl_network_metrics(net, &depth, nullptr, nullptr) == MGL_OK);
  CHECK(json::parse(slurp(dir / "net.budget.json"))["measured"]["depth"] == depth);
  mgl_network_free(net);
  std::filesystem::remove_all(dir);
}
