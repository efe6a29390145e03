#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lamn/runner.hpp"

using namespace lamn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

fs::path tmpdir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("lamnlab_test_" + tag);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("resolve_config fills defaults and rejects unknown keys") {
  io::json cfg;
  cfg["command"] = "simulate";
  const auto resolved = run::resolve_config(cfg);
  CHECK(resolved.at("n") == 400);
  CHECK(resolved.at("substeps") == 16);
  CHECK(resolved.at("model") == "langevin");

  io::json bad = cfg;
  bad["n_paths"] = 3;
  CHECK_THROWS_AS(run::resolve_config(bad), ConfigError);
  io::json nocmd;
  CHECK_THROWS_AS(run::resolve_config(nocmd), ConfigError);
}

TEST_CASE("psi command: integrated preset writes V_L kron A and passes") {
  io::json cfg;
  cfg["command"] = "psi";
  cfg["L"] = 10;
  const auto dir = tmpdir("psi");
  const int rc = run::dispatch(run::resolve_config(cfg), dir);
  CHECK(rc == 0);
  CHECK(fs::exists(dir / "psi.csv"));
  const auto summary = io::json::parse(slurp(dir / "summary.json"));
  CHECK(summary.at("kronecker") == "pass");
  CHECK(summary.at("size") == 11);  // L q + (kappa - q1) = 10 + 1
  fs::remove_all(dir);
}

TEST_CASE("simulate command writes CSV plus sidecar") {
  io::json cfg;
  cfg["command"] = "simulate";
  cfg["n"] = 16;
  cfg["substeps"] = 2;
  cfg["seed"] = 3;
  const auto dir = tmpdir("sim");
  CHECK(run::dispatch(run::resolve_config(cfg), dir) == 0);
  const std::string csv = slurp(dir / "observations.csv");
  CHECK(csv.substr(0, 10) == "time,y1,y2");
  CHECK(csv.find("\r\n") != std::string::npos);
  const auto meta = io::json::parse(slurp(dir / "observations_meta.json"));
  CHECK(meta.at("n") == 16);
  CHECK(meta.at("seed") == 3);
  fs::remove_all(dir);
}

TEST_CASE("manifest is byte-stable and echoes resolved defaults") {
  io::json cfg;
  cfg["command"] = "info";
  cfg["model"] = "integrated";
  cfg["n"] = 32;
  cfg["substeps"] = 4;
  const auto d1 = tmpdir("man1");
  const auto d2 = tmpdir("man2");
  CHECK(run::dispatch(run::resolve_config(cfg), d1) == 0);
  CHECK(run::dispatch(run::resolve_config(cfg), d2) == 0);
  CHECK(slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json"));
  CHECK(slurp(d1 / "info.json") == slurp(d2 / "info.json"));
  const auto man = io::json::parse(slurp(d1 / "manifest.json"));
  CHECK(man.at("config").at("substeps") == 4);
  CHECK(man.at("config").at("seed") == 1);  // default filled explicitly
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("invalid scheme override is a config error naming the invariant") {
  io::json cfg;
  cfg["command"] = "psi";
  cfg["model"] = "stochvol-common";
  cfg["scheme"]["kind"] = "partial";
  cfg["scheme"]["Q"] = {{1.0, 0.4}, {0.4, 0.0}};  // not idempotent
  cfg["scheme"]["B"] = {{0.0, 1.0}};
  const auto dir = tmpdir("badq");
  try {
    run::dispatch(run::resolve_config(cfg), dir);
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("projection") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("estimate command round trip") {
  io::json cfg;
  cfg["command"] = "estimate";
  cfg["model"] = "langevin";
  cfg["n"] = 200;
  cfg["substeps"] = 8;
  cfg["seed"] = 12;
  const auto dir = tmpdir("est");
  CHECK(run::dispatch(run::resolve_config(cfg), dir) == 0);
  const auto rep = io::json::parse(slurp(dir / "estimate.json"));
  CHECK(rep.at("converged") == true);
  const double th = rep.at("theta_hat")[0].get<double>();
  CHECK(th > 0.7);
  CHECK(th < 1.3);
  fs::remove_all(dir);
}

TEST_CASE("model dims validation catches mismatches") {
  io::json cfg;
  cfg["command"] = "simulate";
  cfg["model"] = "factor";
  cfg["dims"]["m"] = 4;  // builtin default is 3
  CHECK_THROWS_AS(run::dispatch(run::resolve_config(cfg), tmpdir("dims")), ConfigError);
}

TEST_CASE("manifest round-trips: feeding it back reproduces identical outputs") {
  io::json cfg;
  cfg["command"] = "lamn-check";
  cfg["model"] = "integrated";
  cfg["n"] = 80;
  cfg["M"] = 500;
  cfg["substeps"] = 4;
  cfg["e_n"] = 4;
  cfg["seed"] = 21;
  cfg["ks"] = false;
  cfg["quiet"] = true;
  cfg["var_rel_tol"] = 1.0;
  cfg["t_rel_tol"] = 1.0;
  const auto d1 = tmpdir("round1");
  run::dispatch(run::resolve_config(cfg), d1);
  // replay from the manifest's echoed config
  const auto manifest = io::json::parse(slurp(d1 / "manifest.json"));
  const auto d2 = tmpdir("round2");
  run::dispatch(run::resolve_config(manifest.at("config")), d2);
  CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));
  CHECK(slurp(d1 / "lambda.csv") == slurp(d2 / "lambda.csv"));
  CHECK(slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

#ifdef LAMNLAB_BIN
TEST_CASE("binary exit codes: 0 ok, 1 failed check, 2 config error") {
  const std::string bin = LAMNLAB_BIN;
  const auto dir = tmpdir("exitcodes");
  auto run_cmd = [&](const std::string& args) {
    const int status = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run_cmd("psi --model integrated --L 5 --out " + (dir / "a").string()) == 0);
  CHECK(run_cmd("psi --model langevin --L 5 --out " + (dir / "b").string()) == 2);  // complete scheme
  CHECK(run_cmd("simulate --n 0 --out " + (dir / "c").string()) == 2);
  fs::remove_all(dir);
}
#endif
