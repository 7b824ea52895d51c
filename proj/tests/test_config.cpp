#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "msrb/config.hpp"
#include "msrb/experiments.hpp"

using namespace msrb;

namespace {

// Small end-to-end configuration: cheap enough for a unit test.
Config tiny_experiment(const std::string& out) {
  Config cfg = Config::parse_string(R"(
[experiment]
kind = converge-pod
seed = 42
epsilon = 1/8

[grid]
dim = 1
fine-cells = 64
coarse-cells = 8

[potential]
kind = sect5-multiscale
sigma = 1
m = 3

[time]
T = 0.05
dt = 0.01

[sampling]
method = sobol
samples = 6
reference-samples = 8

[offline]
samples = 6
pod-modes = 1,2
)");
  cfg.set("experiment.out", out);
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing: sections, fractions, lists") {
  const Config cfg = Config::parse_string(R"(
[grid]
fine-cells = 1024
coarse-cells = 32,64,128
H = 2pi/128          # mesh-size style value

[experiment]
epsilon = 1/16
flag = true
)");
  CHECK(cfg.get_int("grid.fine-cells") == 1024);
  const auto list = cfg.get_int_list("grid.coarse-cells");
  REQUIRE(list.size() == 3);
  CHECK(list[1] == 64);
  CHECK(cfg.get_double("grid.H") == doctest::Approx(2 * 3.14159265358979 / 128).epsilon(1e-9));
  CHECK(cfg.get_double("experiment.epsilon") == doctest::Approx(0.0625));
  CHECK(cfg.get_bool("experiment.flag", false));
  CHECK(cfg.get_int("grid.missing", 7) == 7);
}

TEST_CASE("config errors carry the field path") {
  const Config cfg = Config::parse_string("[a]\nx = hello\n");
  try {
    cfg.get_double("a.x");
    FAIL("expected parse failure");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("a.x") != std::string::npos);
  }
  try {
    cfg.get_string("b.y");
    FAIL("expected missing-key failure");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("b.y") != std::string::npos);
  }
  CHECK_THROWS_AS(Config::parse_string("x = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse_string("[s]\nnovalue\n"), std::invalid_argument);
}

TEST_CASE("unknown experiment kind is a config error") {
  Config cfg = Config::parse_string("[experiment]\nkind = nope\n");
  try {
    run_experiment(cfg);
    FAIL("expected dispatch failure");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("experiment.kind") != std::string::npos);
  }
}

TEST_CASE("canonical string and hash are stable and value-sensitive") {
  Config a = Config::parse_string("[s]\nx = 1\ny = 2\n");
  Config b = Config::parse_string("[s]\ny = 2\nx = 1\n");
  CHECK(a.canonical_string() == b.canonical_string());
  CHECK(a.content_hash() == b.content_hash());
  b.set("s.x", "3");
  CHECK(a.content_hash() != b.content_hash());
}

TEST_CASE("identical config and seed give bit-identical outputs") {
  const auto out1 = run_experiment(tiny_experiment("test-out/det-a"));
  const auto out2 = run_experiment(tiny_experiment("test-out/det-b"));
  REQUIRE(out1.files.size() == 1);
  REQUIRE(out2.files.size() == 1);
  CHECK(slurp(out1.files[0]) == slurp(out2.files[0]));
  CHECK(out1.metrics.at("error_l2_mk2") == out2.metrics.at("error_l2_mk2"));
  std::filesystem::remove_all("test-out");
}

TEST_CASE("basis-build is idempotent through the cache") {
  Config cfg = tiny_experiment("test-out/stage");
  cfg.set("offline.pod-modes", "2");
  const auto first = stage_basis_build(cfg);
  CHECK_FALSE(first.cache_hit);
  const auto second = stage_basis_build(cfg);
  CHECK(second.cache_hit);
  CHECK(first.key == second.key);

  // pod stage reports per-node mode counts
  Config pod_cfg = cfg;
  pod_cfg.set("offline.pod-modes", "2");
  const auto pod = stage_pod(pod_cfg);
  CHECK(pod.metrics.at("m_k_max") <= 2.0);
  CHECK(pod.message.find("node 0:") != std::string::npos);

  // rho criterion variant
  Config rho_cfg = cfg;
  rho_cfg.set("offline.rho", "0.99");
  const auto rho = stage_pod(rho_cfg);
  CHECK(rho.metrics.at("m_k_min") >= 0.0);
  std::filesystem::remove_all("test-out");
}

TEST_CASE("solve stage writes a trajectory") {
  Config cfg = tiny_experiment("test-out/solve");
  cfg.set("sampling.samples", "4");
  cfg.set("offline.pod-modes", "2");
  const auto out = stage_solve(cfg);
  REQUIRE(out.files.size() == 1);
  const std::string body = slurp(out.files[0]);
  CHECK(body.find("t,index,re,im") != std::string::npos);
  CHECK(out.metrics.at("final_l2_norm") > 0.1);

  Config bin_cfg = cfg;
  bin_cfg.set("experiment.out", "test-out/solve-bin");
  bin_cfg.set("experiment.format", "binary");
  const auto bin = stage_solve(bin_cfg);
  CHECK(std::filesystem::exists(bin.files[0]));
  std::filesystem::remove_all("test-out");
}
