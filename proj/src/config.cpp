#include "fragopt/config.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>

#include "fragopt/error.hpp"

namespace fragopt {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kModule = "config";

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigError, kModule, what); }

void only_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) fail("unknown field '" + k + "' in " + where);
  }
}

const Json& need(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail("missing field '" + std::string(key) + "' in " + where);
  return j.at(key);
}

double num(const Json& j, const std::string& what) {
  if (!j.is_number()) fail(what + " must be a number");
  return j.get<double>();
}

std::uint64_t count(const Json& j, const std::string& what) {
  if (!j.is_number_unsigned()) fail(what + " must be a nonnegative integer");
  return j.get<std::uint64_t>();
}

std::vector<double> num_list(const Json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) fail(what + " must be a number or an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(num(x, what));
  return v;
}

DislocationMeasure parse_nu(const Json& j, const std::string& where) {
  const auto type = need(j, "type", where).get<std::string>();
  if (type == "finite") {
    only_keys(j, where, {"type", "atoms"});
    FiniteDiscrete d;
    const auto& atoms = need(j, "atoms", where);
    if (!atoms.is_array() || atoms.empty()) fail(where + ".atoms must be a nonempty array");
    for (const auto& a : atoms) {
      only_keys(a, where + ".atoms[]", {"masses", "weight", "cost"});
      DislocationAtom atom;
      atom.partition = MassPartition(num_list(need(a, "masses", where + ".atoms[]"), where + ".atoms[].masses"));
      atom.weight = num(need(a, "weight", where + ".atoms[]"), where + ".atoms[].weight");
      if (a.contains("cost")) atom.cost = num(a.at("cost"), where + ".atoms[].cost");
      d.atoms.push_back(std::move(atom));
    }
    return d;
  }
  if (type == "binary_density") {
    const auto family = need(j, "family", where).get<std::string>();
    if (family == "power_law") {
      only_keys(j, where, {"type", "family", "c", "rho"});
      return BinaryDensity{PowerLaw{num(need(j, "c", where), where + ".c"), num(need(j, "rho", where), where + ".rho")}};
    }
    if (family == "uniform") {
      only_keys(j, where, {"type", "family", "c"});
      return BinaryDensity{Bounded::uniform(num(need(j, "c", where), where + ".c"))};
    }
    if (family == "table") {
      only_keys(j, where, {"type", "family", "xs", "fs"});
      return BinaryDensity{Bounded::table(num_list(need(j, "xs", where), where + ".xs"),
                                          num_list(need(j, "fs", where), where + ".fs"))};
    }
    fail(where + ".family must be power_law, uniform or table");
  }
  fail(where + ".type must be finite or binary_density");
}

CostFunction parse_phi(const Json& j, const std::string& where) {
  const auto type = need(j, "type", where).get<std::string>();
  if (type == "potential") {
    only_keys(j, where, {"type", "beta_cost"});
    return PotentialCost{num(need(j, "beta_cost", where), where + ".beta_cost")};
  }
  if (type == "per_atom") {
    only_keys(j, where, {"type"});
    return PerAtomCost{};
  }
  fail(where + ".type must be potential or per_atom");
}

ModelSpec parse_model(const std::string& name, const Json& j) {
  const std::string where = "models." + name;
  only_keys(j, where, {"nu", "phi", "beta"});
  ModelSpec m;
  m.name = name;
  m.nu = parse_nu(need(j, "nu", where), where + ".nu");
  m.phi = parse_phi(need(j, "phi", where), where + ".phi");
  m.beta = num(need(j, "beta", where), where + ".beta");
  return m;
}

EnergyMethod parse_method(const std::string& s) {
  for (auto m : {EnergyMethod::Quadrature, EnergyMethod::FirstPassageMC, EnergyMethod::BranchingTreeMC}) {
    if (s == to_string(m)) return m;
  }
  fail("unknown method '" + s + "'");
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
}

}  // namespace

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Validate:
      return "validate";
    case Command::Energy:
      return "energy";
    case Command::Simulate:
      return "simulate";
    case Command::Compare:
      return "compare";
    case Command::Asymptotics:
      return "asymptotics";
    case Command::Optimize:
      return "optimize";
  }
  return "?";
}

std::optional<Command> parse_command(std::string_view s) {
  for (auto c : {Command::Validate, Command::Energy, Command::Simulate, Command::Compare, Command::Asymptotics,
                 Command::Optimize}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

const ModelSpec& RunConfig::model(const std::string& name) const {
  const auto it = models.find(name);
  if (it == models.end()) fail("model '" + name + "' is not defined");
  return it->second;
}

RunConfig parse_config(std::string_view json_text) {
  const auto j = parse_json(json_text);
  only_keys(j, "config",
            {"schema_version", "command", "models", "device1", "device2", "thresholds", "mc", "renewal", "optimize",
             "output"});
  RunConfig c;
  try {
    c.schema_version = static_cast<int>(count(need(j, "schema_version", "config"), "schema_version"));
    if (c.schema_version != kSchemaVersion) {
      fail("schema_version " + std::to_string(c.schema_version) + " is not supported (expected " +
           std::to_string(kSchemaVersion) + ")");
    }
    if (j.contains("command")) {
      c.command = parse_command(j.at("command").get<std::string>());
      if (!c.command) fail("unknown command '" + j.at("command").get<std::string>() + "'");
    }
    const auto& models = need(j, "models", "config");
    if (!models.is_object() || models.empty()) fail("models must be a nonempty object");
    for (const auto& [name, spec] : models.items()) {
      c.model_order.push_back(name);
      try {
        c.models.emplace(name, parse_model(name, spec));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        fail("models." + name + ": " + e.what());
      }
    }
    for (auto [key, slot] : {std::pair{"device1", &c.device1}, std::pair{"device2", &c.device2}}) {
      if (!j.contains(key)) continue;
      *slot = j.at(key).get<std::string>();
      c.model(**slot);
    }

    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      only_keys(t, "thresholds", {"eta", "eta0", "lambda_gap", "gamma_exp", "eta_grid"});
      if (t.contains("eta")) c.thresholds.eta = num_list(t.at("eta"), "thresholds.eta");
      if (t.contains("eta0")) c.thresholds.eta0 = num_list(t.at("eta0"), "thresholds.eta0");
      if (t.contains("lambda_gap")) c.thresholds.lambda_gap = num(t.at("lambda_gap"), "thresholds.lambda_gap");
      if (t.contains("gamma_exp")) c.thresholds.gamma_exp = num(t.at("gamma_exp"), "thresholds.gamma_exp");
      if (t.contains("eta_grid")) c.thresholds.eta_grid = num_list(t.at("eta_grid"), "thresholds.eta_grid");
      if (c.thresholds.lambda_gap && c.thresholds.gamma_exp) fail("give lambda_gap or gamma_exp, not both");
      for (double e : c.thresholds.eta) {
        if (!(e > 0.0 && e <= 1.0)) fail("thresholds.eta values must lie in (0, 1]");
      }
      for (double e : c.thresholds.eta0) {
        if (!(e > 0.0 && e <= 1.0)) fail("thresholds.eta0 values must lie in (0, 1]");
      }
      for (double e : c.thresholds.eta_grid) {
        if (!(e > 0.0 && e <= 1.0)) fail("thresholds.eta_grid values must lie in (0, 1]");
      }
    }

    if (j.contains("mc")) {
      const auto& m = j.at("mc");
      only_keys(m, "mc", {"n_replicas", "seed", "trunc_eps", "methods", "event_log"});
      if (m.contains("n_replicas")) c.mc.n_replicas = count(m.at("n_replicas"), "mc.n_replicas");
      if (m.contains("seed")) c.mc.seed = count(m.at("seed"), "mc.seed");
      if (m.contains("trunc_eps")) c.mc.trunc_eps = num(m.at("trunc_eps"), "mc.trunc_eps");
      if (m.contains("event_log")) c.mc.event_log = m.at("event_log").get<bool>();
      if (m.contains("methods")) {
        c.mc.methods.clear();
        for (const auto& s : m.at("methods")) c.mc.methods.push_back(parse_method(s.get<std::string>()));
        if (c.mc.methods.empty()) fail("mc.methods must not be empty");
      }
    }

    if (j.contains("renewal")) {
      const auto& r = j.at("renewal");
      only_keys(r, "renewal", {"resolution", "mc_paths", "seed", "trunc_eps", "max_support"});
      if (r.contains("resolution")) c.renewal.resolution = num(r.at("resolution"), "renewal.resolution");
      if (r.contains("mc_paths")) c.renewal.mc_paths = count(r.at("mc_paths"), "renewal.mc_paths");
      if (r.contains("seed")) c.renewal.seed = count(r.at("seed"), "renewal.seed");
      if (r.contains("trunc_eps")) c.renewal.trunc_eps = num(r.at("trunc_eps"), "renewal.trunc_eps");
      if (r.contains("max_support")) c.renewal.max_support = count(r.at("max_support"), "renewal.max_support");
    }

    if (j.contains("optimize")) {
      const auto& o = j.at("optimize");
      only_keys(o, "optimize", {"n_points", "ell_floor", "tol"});
      if (o.contains("n_points")) c.optimize.n_points = count(o.at("n_points"), "optimize.n_points");
      if (o.contains("ell_floor")) c.optimize.ell_floor = num(o.at("ell_floor"), "optimize.ell_floor");
      if (o.contains("tol")) c.optimize.tol = num(o.at("tol"), "optimize.tol");
    }

    if (j.contains("output")) {
      const auto& o = j.at("output");
      only_keys(o, "output", {"directory", "formats"});
      if (o.contains("directory")) c.output.directory = o.at("directory").get<std::string>();
      if (o.contains("formats")) {
        c.output.csv = c.output.json = false;
        for (const auto& f : o.at("formats")) {
          const auto s = f.get<std::string>();
          if (s == "csv") {
            c.output.csv = true;
          } else if (s == "json") {
            c.output.json = true;
          } else {
            fail("unknown output format '" + s + "'");
          }
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    // wrong JSON types surface here
    fail(e.what());
  }
  c.optimize.renewal = c.renewal;
  return c;
}

ModelSpec model_from_json(const std::string& name, std::string_view json_text) {
  try {
    return parse_model(name, parse_json(json_text));
  } catch (const nlohmann::json::exception& e) {
    fail(e.what());
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace fragopt
