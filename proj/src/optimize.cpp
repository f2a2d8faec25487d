#include "fragopt/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <ostream>

#include "fragopt/csv.hpp"
#include "fragopt/error.hpp"
#include "fragopt/parallel.hpp"

namespace fragopt {
namespace {

constexpr const char* kModule = "optimize";

SweepPoint evaluate(const Device& d1, const Device& d2, double eta0, double l) {
  const double eta = l == 0.0 ? 1.0 : std::max(std::exp(-l), eta0);
  const auto cfg = l == 0.0 ? TwoStepConfig::second_only(eta0) : TwoStepConfig{eta, eta0};
  const auto e = mean_energy_two_step(d1, d2, cfg);
  return {eta, l, e.value, e.error};
}

void check_opts(double eta0, const OptimizeOptions& o) {
  if (!(eta0 > 0.0 && eta0 < 1.0)) throw Error(ErrorCode::InvalidModel, kModule, "eta0 must lie in (0, 1)");
  if (o.n_points < 3) throw Error(ErrorCode::InvalidModel, kModule, "sweep needs at least 3 points");
  if (!(o.ell_floor > 0.0 && o.ell_floor < 1.0)) throw Error(ErrorCode::InvalidModel, kModule, "ell_floor must lie in (0, 1)");
  if (!(o.tol > 0.0)) throw Error(ErrorCode::InvalidModel, kModule, "tol must be positive");
}

bool ties(const SweepPoint& a, const SweepPoint& b) {
  return std::abs(a.energy - b.energy) <= a.error + b.error + 1e-12 * std::max(std::abs(a.energy), std::abs(b.energy));
}

}  // namespace

std::string_view to_string(BoundaryFlag f) {
  switch (f) {
    case BoundaryFlag::Interior:
      return "interior";
    case BoundaryFlag::AtEta0:
      return "at_eta0";
    case BoundaryFlag::AtOne:
      return "at_one";
  }
  return "?";
}

std::vector<SweepPoint> sweep(const Device& d1, const Device& d2, double eta0, const OptimizeOptions& opts) {
  check_opts(eta0, opts);
  const double l0 = ell(eta0);
  const std::size_t n = opts.n_points;
  std::vector<double> ls{0.0};
  const double step = std::log(opts.ell_floor) / static_cast<double>(n - 2);
  for (std::size_t k = n - 2; k > 0; --k) ls.push_back(l0 * std::exp(step * static_cast<double>(k)));
  ls.push_back(l0);
  std::vector<SweepPoint> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = evaluate(d1, d2, eta0, ls[i]); });
  return out;
}

std::vector<SweepPoint> sweep(const ModelSpec& m1, const ModelSpec& m2, double eta0, const OptimizeOptions& opts) {
  check_opts(eta0, opts);
  const double x_max = default_x_max(eta0);
  return sweep(Device(m1, x_max, opts.renewal), Device(m2, x_max, opts.renewal), eta0, opts);
}

OptimizationResult minimize_eta(const Device& d1, const Device& d2, double eta0, const OptimizeOptions& opts) {
  OptimizationResult r;
  r.eta0 = eta0;
  r.sweep_table = sweep(d1, d2, eta0, opts);
  const auto& t = r.sweep_table;
  const std::size_t n = t.size();
  r.evaluations = n;
  r.energy_second = t.front().energy;
  r.energy_first = t.back().energy;

  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (t[i].energy < t[best].energy) best = i;
  }
  SweepPoint star = t[best];
  r.boundary_flag = BoundaryFlag::Interior;

  if (best != 0 && best != n - 1) {
    // golden section on [ℓ_{best-1}, ℓ_{best+1}]
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = t[best - 1].ell_eta, b = t[best + 1].ell_eta;
    // ℓ = 0 is the second-only procedure, not the limit of the two-step one
    if (a == 0.0) a = 0.5 * t[best].ell_eta;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    auto p1 = evaluate(d1, d2, eta0, x1), p2 = evaluate(d1, d2, eta0, x2);
    r.evaluations += 2;
    const double stop = opts.tol * t.back().ell_eta;
    while (b - a > stop) {
      if (p1.energy <= p2.energy) {
        b = x2;
        x2 = x1;
        p2 = p1;
        x1 = b - g * (b - a);
        p1 = evaluate(d1, d2, eta0, x1);
      } else {
        a = x1;
        x1 = x2;
        p1 = p2;
        x2 = a + g * (b - a);
        p2 = evaluate(d1, d2, eta0, x2);
      }
      ++r.evaluations;
    }
    for (const auto& p : {p1, p2}) {
      if (p.energy < star.energy) star = p;
    }
  }

  if (ties(t.back(), star)) {
    star = t.back();
    r.boundary_flag = BoundaryFlag::AtEta0;
  } else if (ties(t.front(), star)) {
    star = t.front();
    r.boundary_flag = BoundaryFlag::AtOne;
  } else if (best == 0 || best == n - 1) {
    r.boundary_flag = best == 0 ? BoundaryFlag::AtOne : BoundaryFlag::AtEta0;
  }
  r.eta_star = star.eta;
  r.ell_star = star.ell_eta;
  r.energy_star = star.energy;
  r.energy_error = star.error;
  return r;
}

OptimizationResult minimize_eta(const ModelSpec& m1, const ModelSpec& m2, double eta0, const OptimizeOptions& opts) {
  check_opts(eta0, opts);
  const double x_max = default_x_max(eta0);
  return minimize_eta(Device(m1, x_max, opts.renewal), Device(m2, x_max, opts.renewal), eta0, opts);
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& table) {
  os << "eta,ell_eta,energy\n";
  for (const auto& p : table) csv::row(os, {csv::num(p.eta), csv::num(p.ell_eta), csv::num(p.energy)});
}

std::string result_json(const OptimizationResult& r) {
  nlohmann::ordered_json j;
  j["eta0"] = r.eta0;
  j["eta_star"] = r.eta_star;
  j["ell_star"] = r.ell_star;
  j["energy_star"] = r.energy_star;
  j["energy_error"] = r.energy_error;
  j["boundary_flag"] = std::string(to_string(r.boundary_flag));
  j["energy_first_only"] = r.energy_first;
  j["energy_second_only"] = r.energy_second;
  j["evaluations"] = r.evaluations;
  j["sweep_points"] = r.sweep_table.size();
  return j.dump(2);
}

}  // namespace fragopt
