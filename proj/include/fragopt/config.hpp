#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fragopt/model.hpp"
#include "fragopt/optimize.hpp"
#include "fragopt/renewal.hpp"

namespace fragopt {

enum class Command { Validate, Energy, Simulate, Compare, Asymptotics, Optimize };
std::string_view to_string(Command c);
std::optional<Command> parse_command(std::string_view s);

inline constexpr int kSchemaVersion = 1;

struct ThresholdConfig {
  std::vector<double> eta;
  std::vector<double> eta0;
  std::optional<double> lambda_gap;
  std::optional<double> gamma_exp;
  std::vector<double> eta_grid;
};

struct McConfig {
  std::size_t n_replicas = 100000;
  std::uint64_t seed = 1;
  double trunc_eps = 0.0;
  std::vector<EnergyMethod> methods{EnergyMethod::Quadrature};
  bool event_log = false;
};

struct OutputConfig {
  std::string directory = "out";
  bool csv = true;
  bool json = true;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::optional<Command> command;
  /// in file order
  std::vector<std::string> model_order;
  std::map<std::string, ModelSpec> models;
  std::optional<std::string> device1;
  std::optional<std::string> device2;
  ThresholdConfig thresholds;
  McConfig mc;
  RenewalOptions renewal;
  OptimizeOptions optimize;
  OutputConfig output;

  const ModelSpec& model(const std::string& name) const;
};

/// Throws Error(ConfigError) on malformed input, unknown fields or names
/// that do not resolve.
RunConfig parse_config(std::string_view json_text);

/// One catalog entry: {"nu": {...}, "phi": {...}, "beta": r}.
ModelSpec model_from_json(const std::string& name, std::string_view json_text);

/// 64-bit FNV-1a, the config hash recorded in manifests.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace fragopt
