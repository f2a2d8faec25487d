#include "fragopt/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "fragopt/csv.hpp"
#include "fragopt/error.hpp"
#include "fragopt/parallel.hpp"

namespace fragopt {
namespace {

constexpr const char* kModule = "simulate";

const FiniteDiscrete& require_finite(const FragmentationModel& m) {
  const auto* d = m.finite();
  if (!d) {
    throw Error(ErrorCode::InfiniteActivity, kModule,
                "direct simulation needs finitely many atoms; use the quadrature path for '" + m.name() + "'");
  }
  return *d;
}

std::vector<double> cumulative_weights(const FiniteDiscrete& d) {
  std::vector<double> c;
  double run = 0.0;
  for (const auto& a : d.atoms) c.push_back(run += a.weight);
  return c;
}

std::size_t pick(const std::vector<double>& cum, Stream& rng) {
  const double u = rng.uniform() * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  return std::min(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

// A fragment of size x is still broken when -log x <= ℓ(eta).
bool breaks(double size, double eta) { return at_or_below(-std::log(size), ell(eta)); }

// Work-stack run of one device from a single fragment of size 1. Sizes in the
// log and frozen list are multiplied by `scale`, energies by `energy_scale`.
void run_device(const FragmentationModel& model, const std::vector<double>& cum, double eta, Stream& rng,
                const SimOptions& opts, double scale, double energy_scale, SimOutput& out) {
  const auto& atoms = model.finite()->atoms;
  const auto costs = model.atom_costs();
  const double beta = model.beta();
  std::vector<double> stack{1.0};
  while (!stack.empty()) {
    const double x = stack.back();
    stack.pop_back();
    if (!breaks(x, eta)) {
      out.frozen_partition.push_back(scale * x);
      continue;
    }
    if (++out.n_events > opts.max_events) {
      throw Error(ErrorCode::ExplosionGuard, kModule, "event count exceeds the configured cap");
    }
    const std::size_t k = pick(cum, rng);
    const double de = energy_scale * std::pow(x, beta) * costs[k];
    out.energy += de;
    if (opts.event_log) csv::row(*opts.event_log, {csv::num(scale * x), std::to_string(k), csv::num(de)});
    for (double s : atoms[k].partition.masses()) {
      if (s > 0.0) stack.push_back(x * s);
    }
  }
}

}  // namespace

SimOutput simulate_one_step(const FragmentationModel& model, double eta, Stream& rng, const SimOptions& opts) {
  const auto& d = require_finite(model);
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorCode::InvalidModel, kModule, "eta must lie in (0, 1]");
  SimOutput out;
  run_device(model, cumulative_weights(d), eta, rng, opts, 1.0, 1.0, out);
  std::sort(out.frozen_partition.begin(), out.frozen_partition.end(), std::greater<>());
  return out;
}

SimOutput simulate_one_step(const FragmentationModel& model, double eta, std::uint64_t seed) {
  Stream rng(seed, 0);
  return simulate_one_step(model, eta, rng);
}

SimOutput simulate_two_step(const FragmentationModel& m1, const FragmentationModel& m2, const TwoStepConfig& cfg,
                            Stream& rng, const SimOptions& opts) {
  cfg.check();
  const auto& d1 = require_finite(m1);
  const auto& d2 = require_finite(m2);
  std::vector<double> entering{1.0};
  SimOutput out;
  if (cfg.mode == TwoStepMode::Standard) {
    SimOutput first;
    run_device(m1, cumulative_weights(d1), cfg.eta, rng, opts, 1.0, 1.0, first);
    out.energy = first.energy;
    out.n_events = first.n_events;
    entering = first.frozen_partition;
  }
  const auto cum2 = cumulative_weights(d2);
  const double beta2 = m2.beta();
  for (double x : entering) {
    if (!breaks(x, cfg.eta0)) {
      out.frozen_partition.push_back(x);
      continue;
    }
    // self-similarity: x^beta2 times a unit run to eta0 / x
    SimOptions sub_opts = opts;
    sub_opts.max_events = opts.max_events - std::min(opts.max_events, out.n_events);
    SimOutput sub;
    run_device(m2, cum2, std::min(1.0, cfg.eta0 / x), rng, sub_opts, x, std::pow(x, beta2), sub);
    out.energy += sub.energy;
    out.n_events += sub.n_events;
    for (double y : sub.frozen_partition) out.frozen_partition.push_back(y);
  }
  std::sort(out.frozen_partition.begin(), out.frozen_partition.end(), std::greater<>());
  return out;
}

SimOutput simulate_two_step(const FragmentationModel& m1, const FragmentationModel& m2, const TwoStepConfig& cfg,
                            std::uint64_t seed) {
  Stream rng(seed, 0);
  return simulate_two_step(m1, m2, cfg, rng);
}

EnergyEstimate estimate_mean(const SimOp& op, std::size_t n_replicas, std::uint64_t seed) {
  if (n_replicas < 2) throw Error(ErrorCode::InvalidModel, kModule, "need at least 2 replicas");
  std::vector<double> v(n_replicas);
  parallel_for(n_replicas, [&](std::size_t i) {
    Stream rng(seed, i);
    v[i] = op(rng).energy;
  });
  const double n = static_cast<double>(n_replicas);
  // centred on the first replica, so identical replicas give an exact mean
  double s = 0.0;
  for (double x : v) s += x - v[0];
  const double m = v[0] + s / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n), EnergyMethod::BranchingTreeMC};
}

std::vector<double> tagged_fragment(const FragmentationModel& model, double eta, Stream& rng) {
  const auto& d = require_finite(model);
  const double alpha = model.alpha();
  std::vector<double> cum;
  double run = 0.0;
  for (const auto& a : d.atoms) {
    double t = 0.0;
    for (double s : a.partition.masses()) t += std::pow(s, alpha);
    cum.push_back(run += a.weight * t);
  }
  std::vector<double> path;
  double xi = 0.0;
  std::size_t guard = 0;
  while (at_or_below(xi, ell(eta))) {
    const auto& ms = d.atoms[pick(cum, rng)].partition.masses();
    std::vector<double> child;
    double r = 0.0;
    for (double s : ms) child.push_back(r += std::pow(s, alpha));
    xi -= std::log(ms[pick(child, rng)]);
    path.push_back(xi);
    if (++guard > 100'000'000) throw Error(ErrorCode::ExplosionGuard, kModule, "tagged path too long");
  }
  return path;
}

}  // namespace fragopt
