#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "fragopt/cli.hpp"
#include "fragopt/error.hpp"

using namespace fragopt;
namespace fs = std::filesystem;

namespace {

const char* kModels = R"(
  "models": {
    "split37": {
      "nu": {"type": "finite", "atoms": [{"masses": [0.7, 0.3], "weight": 1.0}]},
      "phi": {"type": "potential", "beta_cost": 0.5},
      "beta": 0.5
    },
    "plaw": {
      "nu": {"type": "binary_density", "family": "power_law", "c": 1.0, "rho": 0.5},
      "phi": {"type": "potential", "beta_cost": 0.8},
      "beta": 0.5
    }
  })";

std::string config(const std::string& rest) {
  return std::string("{\"schema_version\": 1,") + kModels + (rest.empty() ? "" : ",") + rest + "}";
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fragopt_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run_text(Command c, const std::string& text, const fs::path& dir, std::string* log = nullptr) {
  auto cfg = parse_config(text);
  cfg.output.directory = dir.string();
  std::ostringstream out, err;
  const int rc = run(c, cfg, text, out, err);
  if (log) *log = out.str() + err.str();
  return rc;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(config(R"("device1": "split37", "thresholds": {"eta0": [0.1, 0.01]})"));
  CHECK(c.model_order == std::vector<std::string>{"split37", "plaw"});
  CHECK(c.thresholds.eta0.size() == 2);
  CHECK(c.output.csv);
  CHECK(c.mc.methods.size() == 1);

  auto code_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::NoRoot;
  };
  CHECK(code_of("{not json") == ErrorCode::ConfigError);
  CHECK(code_of(config(R"("bogus": 1)")) == ErrorCode::ConfigError);
  CHECK(code_of(config(R"("device1": "missing")")) == ErrorCode::ConfigError);
  CHECK(code_of(config(R"("thresholds": {"eta0": 1.5})")) == ErrorCode::ConfigError);
  CHECK(code_of(config(R"("mc": {"n_replicas": "many"})")) == ErrorCode::ConfigError);
  CHECK(code_of(config(R"("mc": {"methods": ["guess"]})")) == ErrorCode::ConfigError);
  CHECK(code_of(std::string("{\"schema_version\": 2,") + kModels + "}") == ErrorCode::ConfigError);

  const auto m = model_from_json("t", R"({"nu": {"type": "binary_density", "family": "table",
                                          "xs": [0.1, 0.5], "fs": [1, 2]},
                                          "phi": {"type": "per_atom"}, "beta": 1})");
  CHECK(m.name == "t");
  CHECK(std::holds_alternative<PerAtomCost>(m.phi));
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  // Σ s = 1.2 is not a mass partition and fails at parse time
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "models": {"bad": {
      "nu": {"type": "finite", "atoms": [{"masses": [0.7, 0.5], "weight": 1.0}]},
      "phi": {"type": "potential", "beta_cost": 0.5}, "beta": 0.5}}})"),
                  Error);
  const std::string bad = R"({"schema_version": 1, "models": {"bad": {
      "nu": {"type": "finite", "atoms": [{"masses": [0.7, 0.3], "weight": 0.0}]},
      "phi": {"type": "potential", "beta_cost": 0.5}, "beta": 0.5}}})";
  std::string log;
  CHECK(run_text(Command::Validate, bad, dir / "v", &log) == kExitValidation);
  CHECK(log.find("INVALID") != std::string::npos);
  CHECK(run_text(Command::Validate, config(""), dir / "ok") == kExitOk);

  // tree simulation of an infinite-activity model is refused as bad input
  CHECK(run_text(Command::Energy,
                 config(R"("device1": "plaw", "thresholds": {"eta0": 0.5},
                           "mc": {"methods": ["branching_tree_mc"], "n_replicas": 10})"),
                 dir / "e", &log) == kExitValidation);
  CHECK(log.find("simulate") != std::string::npos);

  // support cap hit while building the renewal measure: numerical failure
  CHECK(run_text(Command::Energy, config(R"("device1": "split37", "thresholds": {"eta0": 1e-8},
                                            "renewal": {"max_support": 5})"),
                 dir / "n") == kExitNumerical);
  const auto manifest = nlohmann::json::parse(slurp(dir / "n" / "manifest.json"));
  CHECK(manifest["exit_status"] == kExitNumerical);
  CHECK(manifest.contains("error"));
}

TEST_CASE("outputs are byte-identical across runs") {
  const auto dir = scratch("repro");
  const auto text = config(R"("device1": "split37", "device2": "plaw",
      "thresholds": {"eta": 0.5, "eta0": 0.3},
      "renewal": {"mc_paths": 4000},
      "mc": {"n_replicas": 500, "seed": 11, "methods": ["quadrature", "first_passage_mc"]})");
  REQUIRE(run_text(Command::Energy, text, dir / "a") == kExitOk);
  REQUIRE(run_text(Command::Energy, text, dir / "b") == kExitOk);
  for (const char* f : {"energy.csv", "energy.json", "manifest.json"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const auto csv = slurp(dir / "a" / "energy.csv");
  CHECK(csv.rfind("eta,eta0,method,value,error\n", 0) == 0);
}

TEST_CASE("command line") {
  const auto dir = scratch("argv");
  fs::create_directories(dir);
  const auto cfg_path = dir / "sim.json";
  std::ofstream(cfg_path) << config(R"("command": "simulate", "device1": "split37",
                                       "thresholds": {"eta0": 0.05}, "mc": {"n_replicas": 50, "seed": 1},
                                       "output": {"formats": ["csv"]})");
  const std::string out_dir = (dir / "o").string();
  const std::string cp = cfg_path.string();
  std::ostringstream out, err;
  {
    const char* argv[] = {"fragopt", "--config", cp.c_str(), "--seed", "9", "--out", out_dir.c_str()};
    CHECK(run_cli(7, argv, out, err) == kExitOk);
  }
  CHECK(fs::exists(dir / "o" / "simulate.csv"));
  CHECK_FALSE(fs::exists(dir / "o" / "simulate.json"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "o" / "manifest.json"));
  CHECK(manifest["seeds"]["mc"] == 9);
  CHECK(manifest["command"] == "simulate");
  {
    const char* argv[] = {"fragopt", "energy", "--config", cp.c_str()};
    CHECK(run_cli(4, argv, out, err) == kExitValidation);
  }
  {
    const char* argv[] = {"fragopt", "--version"};
    std::ostringstream v;
    CHECK(run_cli(2, argv, v, err) == kExitOk);
    CHECK(v.str() == std::string(kVersion) + "\n");
  }
  {
    const char* argv[] = {"fragopt", "validate"};
    CHECK(run_cli(2, argv, out, err) == kExitValidation);
  }
}
