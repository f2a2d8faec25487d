#include "fragopt/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "fragopt/csv.hpp"
#include "fragopt/error.hpp"
#include "fragopt/parallel.hpp"

namespace fragopt {
namespace {

constexpr const char* kModule = "energy";
constexpr double kEps = std::numeric_limits<double>::epsilon();

// rounding bound for a sum of n nonnegative terms
double sum_bound(double value, std::size_t n) { return kEps * static_cast<double>(n + 1) * std::abs(value); }

double relative_u_error(const RenewalMeasure& u, double x) {
  if (u.backend() != RenewalBackend::GridDensity) return 0.0;
  const double c = u.cumulative(x);
  return c > 0.0 ? u.cumulative_error(x) / c : 0.0;
}

// Ẽ[1{ξ_T <= ℓ0} e^{w ξ_T} Ψ_d(ℓ0 - ξ_T)] for the overshoot law of `over`
// above `level`; `pot` supplies Ψ.
struct OvershootTerm {
  double value = 0.0;
  double error = 0.0;
};

OvershootTerm overshoot_term(const Device& over, double level, double w, const Device& pot, double ell0) {
  if (!(ell0 > level)) return {};
  const auto law = over.overshoot(level);
  auto g = [&](double z) { return std::exp(w * z) * pot.psi(ell0 - z); };
  OvershootTerm t;
  t.value = law.expectation(g, ell0);
  const std::size_t n = law.is_atomic() ? law.atoms().size() : 4096;
  t.error = sum_bound(t.value, n) +
            std::abs(t.value) * (relative_u_error(over.renewal(), level) + relative_u_error(pot.renewal(), ell0 - level));
  return t;
}

std::vector<double> replica_values(std::size_t n, const std::function<double(std::size_t)>& f) {
  std::vector<double> v(n);
  parallel_for(n, [&](std::size_t i) { v[i] = f(i); });
  return v;
}

EnergyEstimate mean_and_error(const std::vector<double>& v, double shift, EnergyMethod method) {
  const double n = static_cast<double>(v.size());
  // centred on the first replica, so identical replicas give an exact mean
  double s = 0.0;
  for (double x : v) s += x - v[0];
  const double m = v[0] + s / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {shift + m, std::sqrt(ss / (n - 1.0) / n), method};
}

double passage_eps(const LevyMeasure& levy, double level, double trunc_eps) {
  if (levy.finite_activity()) return 0.0;
  return trunc_eps > 0.0 ? trunc_eps : default_trunc_eps(levy, level);
}

}  // namespace

std::string_view to_string(EnergyMethod m) {
  switch (m) {
    case EnergyMethod::Quadrature:
      return "quadrature";
    case EnergyMethod::FirstPassageMC:
      return "first_passage_mc";
    case EnergyMethod::BranchingTreeMC:
      return "branching_tree_mc";
  }
  return "unknown";
}

TwoStepConfig TwoStepConfig::from_gap(double eta, double lambda_gap) {
  TwoStepConfig c{eta, eta * std::exp(-lambda_gap)};
  c.check();
  return c;
}

TwoStepConfig TwoStepConfig::from_ratio(double eta, double gamma_exp) {
  TwoStepConfig c{eta, std::pow(eta, gamma_exp)};
  c.check();
  return c;
}

TwoStepConfig TwoStepConfig::second_only(double eta0) {
  TwoStepConfig c{1.0, eta0, TwoStepMode::FirstDeviceSkipped};
  c.check();
  return c;
}

void TwoStepConfig::check() const {
  if (!(eta0 > 0.0 && eta0 <= eta && eta <= 1.0)) {
    std::ostringstream os;
    os << "thresholds must satisfy 0 < eta0 <= eta <= 1, got eta=" << eta << ", eta0=" << eta0;
    throw Error(ErrorCode::InvalidModel, kModule, os.str());
  }
}

Device::Device(const ModelSpec& spec, double x_max, const RenewalOptions& opts)
    : Device(std::make_shared<const FragmentationModel>(spec), x_max, opts) {}

Device::Device(std::shared_ptr<const FragmentationModel> model, double x_max, const RenewalOptions& opts)
    : model_(std::move(model)) {
  levy_ = std::make_shared<const LevyMeasure>(tilted_levy_measure(*model_));
  u_ = std::make_shared<const RenewalMeasure>(renewal_measure(*levy_, x_max, opts));
  psi_ = std::make_shared<const EnergyPotential>(*model_, *u_);
}

double Device::psi_error(double x) const { return std::abs(psi(x)) * relative_u_error(*u_, std::max(x, 0.0)); }

double default_x_max(double eta0) { return std::max(1.5 * ell(eta0), 1.0); }

EnergyEstimate mean_energy_single(const Device& d, double eta0) {
  if (!(eta0 > 0.0 && eta0 <= 1.0)) throw Error(ErrorCode::InvalidModel, kModule, "eta0 must lie in (0, 1]");
  const double l0 = ell(eta0);
  const double v = d.psi(l0);
  const std::size_t n = d.renewal().positions().size();
  return {v, sum_bound(v, n) + d.psi_error(l0), EnergyMethod::Quadrature};
}

EnergyEstimate mean_energy_single(const ModelSpec& spec, double eta0, const RenewalOptions& opts) {
  return mean_energy_single(Device(spec, default_x_max(eta0), opts), eta0);
}

EnergyEstimate mean_energy_single_mc(const Device& d, double eta0, std::size_t n_replicas, std::uint64_t seed,
                                     double trunc_eps) {
  if (n_replicas < 2) throw Error(ErrorCode::InvalidModel, kModule, "need at least 2 replicas");
  const double l0 = ell(eta0);
  const auto& levy = d.levy();
  if (!levy.finite_activity() && l0 <= 0.0) return {0.0, 0.0, EnergyMethod::FirstPassageMC};
  const double eps = passage_eps(levy, l0, trunc_eps);
  const double c = d.model().cost_constant();
  const double w = d.alpha() - d.beta();
  const auto v = replica_values(n_replicas, [&](std::size_t i) {
    Stream rng(seed, i);
    return c * sample_passage(levy, l0, w, rng, eps).weighted_occupation;
  });
  return mean_and_error(v, 0.0, EnergyMethod::FirstPassageMC);
}

EnergyEstimate mean_energy_two_step(const Device& d1, const Device& d2, const TwoStepConfig& cfg) {
  cfg.check();
  const double l0 = cfg.ell_eta0();
  if (cfg.mode == TwoStepMode::FirstDeviceSkipped) return mean_energy_single(d2, cfg.eta0);
  const double l = cfg.ell_eta();
  const auto first = mean_energy_single(d1, cfg.eta);
  const auto t = overshoot_term(d1, l, d1.alpha() - d2.beta(), d2, l0);
  return {first.value + t.value, first.error + t.error, EnergyMethod::Quadrature};
}

EnergyEstimate mean_energy_two_step(const ModelSpec& m1, const ModelSpec& m2, const TwoStepConfig& cfg,
                                    const RenewalOptions& opts) {
  const double x_max = default_x_max(cfg.eta0);
  return mean_energy_two_step(Device(m1, x_max, opts), Device(m2, x_max, opts), cfg);
}

EnergyEstimate mean_energy_two_step_mc(const Device& d1, const Device& d2, const TwoStepConfig& cfg,
                                       std::size_t n_replicas, std::uint64_t seed, double trunc_eps) {
  cfg.check();
  if (n_replicas < 100) throw Error(ErrorCode::InvalidModel, kModule, "need at least 100 replicas");
  const double l0 = cfg.ell_eta0();
  if (cfg.mode == TwoStepMode::FirstDeviceSkipped) {
    auto e = mean_energy_single(d2, cfg.eta0);
    e.method = EnergyMethod::FirstPassageMC;
    return e;
  }
  const double l = cfg.ell_eta();
  const double first = d1.psi(l);
  if (!(l0 > l)) return {first, d1.psi_error(l), EnergyMethod::FirstPassageMC};
  const auto& levy = d1.levy();
  const double eps = passage_eps(levy, l, trunc_eps);
  const double w = d1.alpha() - d2.beta();
  const auto v = replica_values(n_replicas, [&](std::size_t i) {
    Stream rng(seed, i);
    const double z = sample_passage(levy, l, 0.0, rng, eps).xi_at_passage;
    return at_or_below(z, l0) ? std::exp(w * z) * d2.psi(l0 - z) : 0.0;
  });
  auto e = mean_and_error(v, first, EnergyMethod::FirstPassageMC);
  e.error = std::hypot(e.error, d1.psi_error(l));
  return e;
}

double energy_difference_vs_second(const Device& d1, const Device& d2, const TwoStepConfig& cfg) {
  cfg.check();
  if (cfg.mode == TwoStepMode::FirstDeviceSkipped) return 0.0;
  const double l = cfg.ell_eta();
  const double l0 = cfg.ell_eta0();
  const auto own = overshoot_term(d1, l, d1.alpha() - d2.beta(), d2, l0);
  const auto other = overshoot_term(d2, l, d2.alpha() - d2.beta(), d2, l0);
  return d1.psi(l) - d2.psi(l) + own.value - other.value;
}

double energy_difference_vs_first(const Device& d1, const Device& d2, const TwoStepConfig& cfg) {
  cfg.check();
  if (cfg.mode == TwoStepMode::FirstDeviceSkipped) {
    return mean_energy_single(d2, cfg.eta0).value - mean_energy_single(d1, cfg.eta0).value;
  }
  const double l = cfg.ell_eta();
  const double l0 = cfg.ell_eta0();
  if (!(l0 > l)) return 0.0;
  const auto law = d1.overshoot(l);
  const double a = d1.alpha();
  const double b = d1.beta();
  const double bh = d2.beta();
  // one pass over the law, so shared rounding cancels when the devices agree
  return law.expectation(
      [&](double z) { return std::exp((a - bh) * z) * d2.psi(l0 - z) - std::exp((a - b) * z) * d1.psi(l0 - z); },
      l0);
}

void write_energy_csv(std::ostream& os, const std::vector<EnergyRow>& rows) {
  os << "eta,eta0,method,value,error\n";
  for (const auto& r : rows) {
    csv::row(os, {csv::num(r.eta), csv::num(r.eta0), std::string(to_string(r.estimate.method)),
                  csv::num(r.estimate.value), csv::num(r.estimate.error)});
  }
}

}  // namespace fragopt
