#include "fragopt/cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <algorithm>
#include <boost/version.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "fragopt/asymptotics.hpp"
#include "fragopt/csv.hpp"
#include "fragopt/energy.hpp"
#include "fragopt/error.hpp"
#include "fragopt/optimize.hpp"
#include "fragopt/parallel.hpp"
#include "fragopt/simulate.hpp"

namespace fragopt {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kModule = "cli";

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, kModule, what); }

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string order_string(const std::array<Procedure, 3>& o) {
  return std::string(to_string(o[0])) + ">" + std::string(to_string(o[1])) + ">" + std::string(to_string(o[2]));
}

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// Collects output files under the run directory.
class Outputs {
 public:
  explicit Outputs(const OutputConfig& cfg) : cfg_(cfg), dir_(cfg.directory) { fs::create_directories(dir_); }

  bool csv() const { return cfg_.csv; }
  bool json() const { return cfg_.json; }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::ConfigError, kModule, "cannot write " + (dir_ / name).string());
    f << content;
    files_.push_back(name);
  }
  void write_json(const std::string& name, const Json& j) {
    if (json()) write(name, j.dump(2) + "\n");
  }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  OutputConfig cfg_;
  fs::path dir_;
  std::vector<std::string> files_;
};

struct Ctx {
  const RunConfig& cfg;
  Outputs& out;
  std::ostream& log;
};

const ModelSpec& first_model(const RunConfig& c) {
  if (!c.device1) config_error("this command needs device1");
  return c.model(*c.device1);
}

const ModelSpec& second_model(const RunConfig& c) {
  if (!c.device2) config_error("this command needs device2");
  return c.model(*c.device2);
}

// (eta, eta0) pairs; eta == 0 marks a single-device run
std::vector<std::pair<double, double>> threshold_pairs(const RunConfig& c, bool two_step) {
  const auto& t = c.thresholds;
  std::vector<std::pair<double, double>> out;
  if (t.lambda_gap || t.gamma_exp) {
    if (t.eta.empty()) config_error("lambda_gap and gamma_exp need thresholds.eta");
    if (!two_step) config_error("lambda_gap and gamma_exp need device2");
    for (double e : t.eta) {
      const auto cfg = t.lambda_gap ? TwoStepConfig::from_gap(e, *t.lambda_gap) : TwoStepConfig::from_ratio(e, *t.gamma_exp);
      out.emplace_back(cfg.eta, cfg.eta0);
    }
    return out;
  }
  if (t.eta0.empty()) config_error("thresholds.eta0 is required");
  if (!two_step) {
    for (double e0 : t.eta0) out.emplace_back(0.0, e0);
    return out;
  }
  if (t.eta.empty()) config_error("two-step runs need thresholds.eta");
  const std::size_t n = std::max(t.eta.size(), t.eta0.size());
  if ((t.eta.size() != 1 && t.eta.size() != n) || (t.eta0.size() != 1 && t.eta0.size() != n)) {
    config_error("thresholds.eta and thresholds.eta0 must have equal lengths or length 1");
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(t.eta[t.eta.size() == 1 ? 0 : i], t.eta0[t.eta0.size() == 1 ? 0 : i]);
  }
  return out;
}

double smallest_eta0(const std::vector<std::pair<double, double>>& pairs) {
  double m = 1.0;
  for (const auto& p : pairs) m = std::min(m, p.second);
  return m;
}

Json diagnostics_json(const DiagnosticsReport& r) {
  Json j;
  j["name"] = r.name;
  j["valid"] = r.valid;
  j["violations"] = r.violations;
  j["warnings"] = r.warnings;
  j["alpha"] = opt(r.alpha);
  j["cost_constant"] = opt(r.cost_constant);
  j["m_alpha"] = opt(r.m_alpha);
  j["mean_jump"] = opt(r.mean_jump);
  j["p_lower"] = r.p_lower;
  j["lattice"] = r.lattice;
  j["lattice_span"] = opt(r.lattice_span);
  j["infinite_activity"] = r.infinite_activity;
  return j;
}

int cmd_validate(Ctx& x) {
  std::vector<std::string> names;
  if (x.cfg.device1) names.push_back(*x.cfg.device1);
  if (x.cfg.device2 && x.cfg.device2 != x.cfg.device1) names.push_back(*x.cfg.device2);
  if (names.empty()) names = x.cfg.model_order;
  Json all = Json::array();
  bool ok = true;
  for (const auto& n : names) {
    const auto r = validate(x.cfg.model(n));
    ok = ok && r.valid;
    all.push_back(diagnostics_json(r));
    x.log << "validate " << n << ": " << (r.valid ? "valid" : "INVALID");
    if (r.alpha) x.log << " alpha=" << csv::num(*r.alpha);
    if (r.cost_constant) x.log << " C=" << csv::num(*r.cost_constant);
    if (r.lattice) x.log << " lattice";
    if (r.infinite_activity) x.log << " infinite_activity";
    x.log << "\n";
    for (const auto& v : r.violations) x.log << "  violation: " << v << "\n";
    for (const auto& w : r.warnings) x.log << "  warning: " << w << "\n";
  }
  x.out.write_json("validate.json", all);
  return ok ? kExitOk : kExitValidation;
}

int cmd_energy(Ctx& x) {
  const auto& c = x.cfg;
  const bool two = c.device2.has_value();
  const auto pairs = threshold_pairs(c, two);
  const double x_max = default_x_max(smallest_eta0(pairs));
  const auto m1 = std::make_shared<const FragmentationModel>(first_model(c));
  const Device d1(m1, x_max, c.renewal);
  std::optional<Device> d2;
  if (two) d2.emplace(std::make_shared<const FragmentationModel>(second_model(c)), x_max, c.renewal);

  std::vector<EnergyRow> rows;
  for (const auto& [eta, eta0] : pairs) {
    for (auto method : c.mc.methods) {
      EnergyEstimate e;
      if (!two) {
        switch (method) {
          case EnergyMethod::Quadrature:
            e = mean_energy_single(d1, eta0);
            break;
          case EnergyMethod::FirstPassageMC:
            e = mean_energy_single_mc(d1, eta0, c.mc.n_replicas, c.mc.seed, c.mc.trunc_eps);
            break;
          case EnergyMethod::BranchingTreeMC:
            e = estimate_mean([&](Stream& r) { return simulate_one_step(*m1, eta0, r); }, c.mc.n_replicas, c.mc.seed);
            break;
        }
      } else {
        const TwoStepConfig cfg{eta, eta0};
        switch (method) {
          case EnergyMethod::Quadrature:
            e = mean_energy_two_step(d1, *d2, cfg);
            break;
          case EnergyMethod::FirstPassageMC:
            e = mean_energy_two_step_mc(d1, *d2, cfg, c.mc.n_replicas, c.mc.seed, c.mc.trunc_eps);
            break;
          case EnergyMethod::BranchingTreeMC:
            e = estimate_mean([&](Stream& r) { return simulate_two_step(*m1, d2->model(), cfg, r); },
                              c.mc.n_replicas, c.mc.seed);
            break;
        }
      }
      const double eta_col = two ? eta : eta0;
      rows.push_back({eta_col, eta0, e});
      x.log << "energy eta=" << csv::num(eta_col) << " eta0=" << csv::num(eta0) << " " << to_string(method) << ": "
            << csv::num(e.value) << " +- " << csv::num(e.error) << "\n";
    }
  }
  if (x.out.csv()) {
    std::ostringstream os;
    write_energy_csv(os, rows);
    x.out.write("energy.csv", os.str());
  }
  Json j = Json::array();
  for (const auto& r : rows) {
    j.push_back({{"eta", r.eta}, {"eta0", r.eta0}, {"method", std::string(to_string(r.estimate.method))},
                 {"value", r.estimate.value}, {"error", r.estimate.error}});
  }
  x.out.write_json("energy.json", j);
  return kExitOk;
}

int cmd_simulate(Ctx& x) {
  const auto& c = x.cfg;
  const bool two = c.device2.has_value();
  const auto pairs = threshold_pairs(c, two);
  if (pairs.size() != 1) config_error("simulate takes a single threshold pair");
  const auto [eta, eta0] = pairs.front();
  const FragmentationModel m1(first_model(c));
  std::optional<FragmentationModel> m2;
  if (two) m2.emplace(second_model(c));
  auto once = [&](Stream& r, const SimOptions& o) {
    return two ? simulate_two_step(m1, *m2, TwoStepConfig{eta, eta0}, r, o) : simulate_one_step(m1, eta0, r, o);
  };
  const std::size_t n = c.mc.n_replicas;
  if (n < 2) config_error("simulate needs at least 2 replicas");
  struct Rec {
    double energy;
    std::size_t events, fragments;
  };
  std::vector<Rec> recs(n);
  parallel_for(n, [&](std::size_t i) {
    Stream rng(c.mc.seed, i);
    const auto s = once(rng, {});
    recs[i] = {s.energy, s.n_events, s.frozen_partition.size()};
  });
  double mean = 0.0;
  for (const auto& r : recs) mean += r.energy / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& r : recs) ss += (r.energy - mean) * (r.energy - mean);
  const double se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));

  // replica 0 again, with its events and final partition
  std::ostringstream events;
  events << "size,atom,energy\n";
  SimOptions o;
  if (c.mc.event_log) o.event_log = &events;
  Stream rng0(c.mc.seed, 0);
  const auto first = once(rng0, o);

  if (x.out.csv()) {
    std::ostringstream os;
    os << "replica,energy,n_events,n_fragments\n";
    for (std::size_t i = 0; i < n; ++i) {
      csv::row(os, {std::to_string(i), csv::num(recs[i].energy), std::to_string(recs[i].events),
                    std::to_string(recs[i].fragments)});
    }
    x.out.write("simulate.csv", os.str());
    std::ostringstream fr;
    fr << "size\n";
    for (double s : first.frozen_partition) fr << csv::num(s) << "\n";
    x.out.write("frozen_partition.csv", fr.str());
    if (c.mc.event_log) x.out.write("events.csv", events.str());
  }
  x.out.write_json("simulate.json", Json{{"eta", two ? eta : eta0},
                                         {"eta0", eta0},
                                         {"replicas", n},
                                         {"mean_energy", mean},
                                         {"std_error", se},
                                         {"replica0_energy", first.energy},
                                         {"replica0_fragments", first.frozen_partition.size()}});
  x.log << "simulate " << n << " replicas: mean energy " << csv::num(mean) << " +- " << csv::num(se) << "\n";
  return kExitOk;
}

Json verdict_json(const ComparisonVerdict& v) {
  return Json{{"determined", v.determined},
              {"row", v.row},
              {"order", v.determined ? Json(order_string(v.order)) : Json(nullptr)},
              {"rationale", v.rationale}};
}

Json report_json(const TheoremReport& r) {
  return Json{{"holds_from_vs_first", opt(r.holds_from_vs_first)},
              {"holds_from_vs_second", opt(r.holds_from_vs_second)},
              {"eps_first", r.eps_first},
              {"eps_second", r.eps_second},
              {"rows", r.rows.size()}};
}

int cmd_compare(Ctx& x) {
  const auto& c = x.cfg;
  const auto& s1 = first_model(c);
  const auto& s2 = second_model(c);
  const auto m1 = std::make_shared<const FragmentationModel>(s1);
  const auto m2 = std::make_shared<const FragmentationModel>(s2);
  Json j;
  const double a = m1->alpha(), b = m1->beta(), ah = m2->alpha(), bh = m2->beta();
  if (b < a && bh < ah && b > 0.0 && bh > 0.0) {
    const auto v = corollary_verdict(a, b, ah, bh);
    j["verdict"] = verdict_json(v);
    x.log << "compare verdict: " << (v.determined ? order_string(v.order) : "undetermined") << " (" << v.rationale
          << ")\n";
  } else {
    j["verdict"] = nullptr;
    x.log << "compare verdict: not applicable (needs 0 < beta < alpha for both devices)\n";
  }

  TheoremReport rep;
  auto grid = c.thresholds.eta_grid;
  if (c.thresholds.gamma_exp) {
    const double g = *c.thresholds.gamma_exp;
    if (grid.empty()) grid = {std::exp(-0.1), std::exp(-0.01), std::exp(-0.001)};
    const auto v = inf_efficiency(*m1, *m2);
    j["regime"] = "large";
    j["gamma_exp"] = g;
    j["inf_efficiency"] = {{"verdict", std::string(to_string(v.verdict))},
                           {"rho", v.rv1.rho},
                           {"rho_hat", v.rv2.rho},
                           {"q_minus", v.q.q_minus},
                           {"q_plus", v.q.q_plus},
                           {"q_limit", std::string(to_string(v.q.limit))},
                           {"cost_ratio", v.cost_ratio}};
    rep = check_large_threshold_theorems(s1, s2, g, grid, 0.5, c.renewal);
    x.log << "compare inf_efficiency: " << to_string(v.verdict) << "\n";
  } else {
    const double lam = c.thresholds.lambda_gap.value_or(1.0);
    if (grid.empty()) {
      for (int k = 10; k <= 40; k += 5) grid.push_back(std::exp(-k));
    }
    const double eta_min = *std::min_element(grid.begin(), grid.end());
    const double x_max = std::max(1.0, 1.25 * (ell(eta_min) + lam));
    const Device d1(m1, x_max, c.renewal), d2(m2, x_max, c.renewal);
    j["regime"] = "small";
    j["lambda_gap"] = lam;
    rep = check_small_threshold_theorems(d1, d2, lam, grid);
    Json ord = Json::array();
    for (double eta : grid) {
      const auto o = empirical_ordering(d1, d2, TwoStepConfig::from_gap(eta, lam));
      ord.push_back({{"eta", eta}, {"e12", o.e12}, {"e1", o.e1}, {"e2", o.e2}, {"order", order_string(o.order)}});
      x.log << "compare eta=" << csv::num(eta) << ": " << order_string(o.order) << "\n";
    }
    j["ordering"] = ord;
  }
  j["report"] = report_json(rep);
  if (x.out.csv()) {
    std::ostringstream os;
    write_report_csv(os, rep);
    x.out.write("report.csv", os.str());
  }
  x.out.write_json("compare.json", j);
  return kExitOk;
}

Json model_asymptotics(const FragmentationModel& m) {
  Json j;
  j["name"] = m.name();
  if (m.beta() < m.alpha()) {
    const auto lim = small_threshold_limit(m);
    j["small_threshold_limit"] = lim.value;
    j["small_threshold_limit_m_alpha"] = lim.value_literal;
    j["lattice"] = lim.lattice;
    j["warnings"] = lim.warnings;
  } else {
    j["small_threshold_limit"] = nullptr;
  }
  const auto so = stationary_overshoot(m);
  j["overshoot_normalizer"] = so.normalizer();
  j["overshoot_mass"] = so.total_mass();
  const auto rv = rv_index(m);
  j["rv_index"] = {{"rho", rv.rho}, {"residual", rv.residual}, {"not_rv", rv.not_rv}};
  return j;
}

int cmd_asymptotics(Ctx& x) {
  const auto& c = x.cfg;
  const FragmentationModel m1(first_model(c));
  Json j;
  j["device1"] = model_asymptotics(m1);
  x.log << "asymptotics " << m1.name() << ": rho=" << csv::num(j["device1"]["rv_index"]["rho"].get<double>())
        << " overshoot normalizer=" << csv::num(j["device1"]["overshoot_normalizer"].get<double>()) << "\n";
  if (c.device2) {
    const FragmentationModel m2(second_model(c));
    j["device2"] = model_asymptotics(m2);
    const auto q = q_bounds(m1, m2);
    j["q_bounds"] = {{"q_minus", q.q_minus}, {"q_plus", q.q_plus}, {"limit", std::string(to_string(q.limit))},
                     {"slope", q.slope}};
    const bool rv = !j["device1"]["rv_index"]["not_rv"].get<bool>() && !j["device2"]["rv_index"]["not_rv"].get<bool>();
    if (rv) {
      const auto v = inf_efficiency(m1, m2);
      j["inf_efficiency"] = std::string(to_string(v.verdict));
      x.log << "asymptotics inf_efficiency: " << to_string(v.verdict) << "\n";
      if (c.thresholds.gamma_exp) {
        const auto k = large_threshold_constants(m1, m2, *c.thresholds.gamma_exp);
        j["gamma_constants"] = {{"A", k.gamma.A}, {"A_hat", k.gamma.A_hat}, {"B", k.gamma.B}};
      }
    } else {
      j["inf_efficiency"] = nullptr;
    }
    if (c.thresholds.lambda_gap) {
      const auto k = constants_F_D(first_model(c), second_model(c), *c.thresholds.lambda_gap, c.renewal);
      j["gap_constants"] = {{"F", k.F}, {"D", k.D}, {"D_hat", k.D_hat}};
      x.log << "asymptotics F=" << csv::num(k.F) << " D=" << csv::num(k.D) << " D_hat=" << csv::num(k.D_hat) << "\n";
    }
  }
  if (x.out.csv() && !c.thresholds.eta0.empty()) {
    const Device d(first_model(c), default_x_max(*std::min_element(c.thresholds.eta0.begin(), c.thresholds.eta0.end())),
                   c.renewal);
    std::ostringstream os;
    d.renewal().write_csv(os);
    x.out.write("renewal.csv", os.str());
  }
  x.out.write_json("asymptotics.json", j);
  return kExitOk;
}

int cmd_optimize(Ctx& x) {
  const auto& c = x.cfg;
  if (c.thresholds.eta0.size() != 1) config_error("optimize needs a single thresholds.eta0");
  const double eta0 = c.thresholds.eta0.front();
  const auto r = minimize_eta(first_model(c), second_model(c), eta0, c.optimize);
  if (x.out.csv()) {
    std::ostringstream os;
    write_sweep_csv(os, r.sweep_table);
    x.out.write("sweep.csv", os.str());
  }
  if (x.out.json()) x.out.write("optimize.json", result_json(r) + "\n");
  x.log << "optimize eta0=" << csv::num(eta0) << ": eta*=" << csv::num(r.eta_star) << " energy*=" << csv::num(r.energy_star)
        << " (" << to_string(r.boundary_flag) << ")\n";
  return kExitOk;
}

void write_manifest(Outputs& out, Command command, const RunConfig& c, std::string_view text, int status,
                    const std::string& error) {
  Json m;
  m["tool"] = "fragopt";
  m["version"] = std::string(kVersion);
  m["command"] = std::string(to_string(command));
  m["schema_version"] = c.schema_version;
  m["config_fnv1a64"] = hex64(fnv1a64(text));
  m["seeds"] = {{"mc", c.mc.seed}, {"renewal", c.renewal.seed}};
  m["libraries"] = {{"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) +
                                  "." + std::to_string(BOOST_VERSION % 100)},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"compiler", __VERSION__}};
  m["exit_status"] = status;
  if (!error.empty()) m["error"] = error;
  m["outputs"] = out.files();
  std::ofstream f(out.dir() / "manifest.json", std::ios::binary);
  f << m.dump(2) << "\n";
}

}  // namespace

int run(Command command, const RunConfig& config, std::string_view config_text, std::ostream& out, std::ostream& err) {
  Outputs files(config.output);
  Ctx ctx{config, files, out};
  int status = kExitOk;
  std::string error;
  try {
    switch (command) {
      case Command::Validate:
        status = cmd_validate(ctx);
        break;
      case Command::Energy:
        status = cmd_energy(ctx);
        break;
      case Command::Simulate:
        status = cmd_simulate(ctx);
        break;
      case Command::Compare:
        status = cmd_compare(ctx);
        break;
      case Command::Asymptotics:
        status = cmd_asymptotics(ctx);
        break;
      case Command::Optimize:
        status = cmd_optimize(ctx);
        break;
    }
  } catch (const Error& e) {
    error = e.what();
    status = e.is_validation() ? kExitValidation : kExitNumerical;
  } catch (const std::exception& e) {
    error = std::string("unexpected: ") + e.what();
    status = kExitNumerical;
  }
  if (!error.empty()) err << "fragopt: " << error << "\n";
  write_manifest(files, command, config, config_text, status, error);
  return status;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expected energies of one- and two-step stochastic fragmentation"};
  std::string command_name, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("command", command_name, "validate, energy, simulate, compare, asymptotics or optimize");
  app.add_option("-c,--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "override mc.seed and renewal.seed");
  app.add_option("--out", out_dir, "override output.directory");
  app.set_version_flag("--version", std::string(kVersion));
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "fragopt: " << e.what() << "\n" << app.help();
    return kExitValidation;
  }

  std::ifstream f(config_path, std::ios::binary);
  if (!f) {
    err << "fragopt: cannot read config " << config_path << "\n";
    return kExitValidation;
  }
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  RunConfig cfg;
  try {
    cfg = parse_config(text);
  } catch (const Error& e) {
    err << "fragopt: " << e.what() << "\n";
    return kExitValidation;
  }
  std::optional<Command> cmd = cfg.command;
  if (!command_name.empty()) {
    cmd = parse_command(command_name);
    if (!cmd) {
      err << "fragopt: unknown command '" << command_name << "'\n";
      return kExitValidation;
    }
    if (cfg.command && cfg.command != cmd) {
      err << "fragopt: command '" << command_name << "' disagrees with the config's '" << to_string(*cfg.command)
          << "'\n";
      return kExitValidation;
    }
  }
  if (!cmd) {
    err << "fragopt: no command given\n";
    return kExitValidation;
  }
  if (seed) cfg.mc.seed = cfg.renewal.seed = cfg.optimize.renewal.seed = *seed;
  if (!out_dir.empty()) cfg.output.directory = out_dir;
  try {
    return run(*cmd, cfg, text, out, err);
  } catch (const std::exception& e) {
    // output directory trouble
    err << "fragopt: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace fragopt
