#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fragopt/model.hpp"
#include "fragopt/rng.hpp"

namespace fragopt {

struct Jump {
  double x = 0.0;
  double mass = 0.0;
};

/// Jump measure Π of a driftless subordinator: either finitely many atoms or
/// a density on (0, ∞) obtained from a binary dislocation density.
class LevyMeasure {
 public:
  /// Sorted, with positions closer than 1e-12 (relative) merged.
  static LevyMeasure discrete(std::vector<Jump> jumps);
  /// Pushforward of s^alpha nu(ds) by s -> -log s for a binary density.
  static LevyMeasure from_binary(const BinaryDensity& nu, double alpha, double mean_jump);

  bool is_discrete() const { return !table_; }
  bool finite_activity() const;
  std::span<const Jump> jumps() const { return jumps_; }

  double total_mass() const;
  /// Π((u, ∞)); for u <= 0 this is the total mass.
  double tail(double u) const;
  /// ∫_0^w Π((u, ∞)) du = ∫ min(x, w) Π(dx).
  double integrated_tail(double w) const;
  double mean() const;
  /// ∫ (1 - e^{-q x}) Π(dx), computed directly from the jump measure.
  double laplace(double q) const;
  /// Density π(y) (density variant only).
  double density(double y) const;
  /// ∫_0^eps x Π(dx), the drift lost by dropping jumps below eps.
  double small_jump_mean(double eps) const;
  std::optional<double> lattice_span() const { return lattice_span_; }
  /// Smallest atom, or 0 for a density.
  double min_jump() const;

  /// Rate of jumps of size >= eps (eps is ignored for finite activity when 0).
  double jump_rate(double eps) const;
  /// Draws a jump from Π restricted to [eps, ∞), normalized.
  double sample_jump(Stream& rng, double eps) const;

 private:
  struct Table;

  std::vector<Jump> jumps_;
  std::vector<double> cumulative_;  // running sum of jump masses
  double mean_ = 0.0;
  std::optional<double> lattice_span_;
  std::shared_ptr<const Table> table_;
};

/// Smallest span h > 0 with every x_i in hZ, searched through rational ratios
/// with denominators up to 1000 and relative tolerance 1e-9.
std::optional<double> lattice_span(std::span<const double> xs);

/// The tagged-fragment subordinator under the tilted law.
struct SubordinatorSpec {
  std::shared_ptr<const FragmentationModel> model;
  LevyMeasure levy;

  double alpha() const { return model->alpha(); }
  double mean_jump() const { return model->mean_jump(); }
  /// κ(q + 1)
  double phi(double q) const { return model->kappa(q + 1.0); }
  /// κ(q + alpha); equals levy.laplace(q) up to quadrature error.
  double tilted_phi(double q) const;
};

LevyMeasure tilted_levy_measure(const FragmentationModel& model);
SubordinatorSpec make_subordinator(const FragmentationModel& model);

double phi(const FragmentationModel& model, double q);
double tilted_phi(const FragmentationModel& model, double q);

struct PassageSample {
  double level = 0.0;
  double xi_at_passage = 0.0;
  /// ∫_0^T e^{w ξ_t} dt over the time spent at states ξ <= level.
  double weighted_occupation = 0.0;
  std::size_t n_jumps = 0;
};

/// Largest eps with eps * ∫_0^eps x Π(dx) <= 1e-6 * level^2 * φ̃(1/level) / e.
/// Jumps below eps are replaced by their mean drift, so what is lost is their
/// spread; over a passage time of about 1/φ̃(1/level) its standard deviation
/// stays near 1e-3 * level.
double default_trunc_eps(const LevyMeasure& levy, double level);

/// Simulates ξ until it first exceeds `level`. Exact compound-Poisson
/// simulation for finite activity. Otherwise jumps below trunc_eps are
/// replaced by the drift ∫_0^eps x Π(dx); a path that drifts across the level
/// stops exactly on it.
PassageSample sample_passage(const LevyMeasure& levy, double level, double weight_exponent, Stream& rng,
                             double trunc_eps = 0.0);

}  // namespace fragopt
