#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fragopt/levy.hpp"

namespace fragopt {

enum class RenewalBackend { Lattice, Atomic, GridDensity };

std::string_view to_string(RenewalBackend b);

struct RenewalOptions {
  /// Bin width for the Monte Carlo backend; 0 picks x_max / 2000.
  double resolution = 0.0;
  std::size_t mc_paths = 100000;
  std::uint64_t seed = 1;
  /// Jump truncation for infinite activity; 0 picks default_trunc_eps(x_max).
  double trunc_eps = 0.0;
  /// Use the Monte Carlo backend even for a discrete measure.
  bool force_grid = false;
  std::size_t max_support = 4'000'000;
};

/// U = (1/λ) Σ_n F^{*n}, the expected occupation measure of the tilted
/// subordinator, on [0, x_max].
class RenewalMeasure {
 public:
  RenewalBackend backend() const { return backend_; }
  double x_max() const { return x_max_; }

  /// Atom positions and masses (Lattice and Atomic backends).
  std::span<const double> positions() const { return positions_; }
  std::span<const double> masses() const { return masses_; }

  /// GridDensity backend.
  double step() const { return step_; }
  double atom_at_zero() const { return atom_at_zero_; }
  std::span<const double> density() const { return density_; }
  std::size_t sample_count() const { return sample_count_; }
  double trunc_eps() const { return trunc_eps_; }

  /// U([0, x]), atoms at x included.
  double cumulative(double x) const;
  /// Standard error of cumulative(x) (zero for exact backends).
  double cumulative_error(double x) const;
  /// ∫_{[0, x]} e^{θ y} U(dy).
  double weighted(double x, double theta) const;
  double mass_at_zero() const;

  /// Columns x, mass_or_density, cumulative.
  void write_csv(std::ostream& os) const;

 private:
  friend RenewalMeasure renewal_measure(const LevyMeasure&, double, const RenewalOptions&);

  RenewalBackend backend_ = RenewalBackend::Atomic;
  double x_max_ = 0.0;
  std::vector<double> positions_;
  std::vector<double> masses_;
  std::vector<double> prefix_;
  double step_ = 0.0;
  double atom_at_zero_ = 0.0;
  std::vector<double> density_;
  std::vector<double> bin_prefix_;
  // cumulative masses at bin edges, one row per MC batch
  std::vector<std::vector<double>> batch_prefix_;
  std::size_t sample_count_ = 0;
  double trunc_eps_ = 0.0;
};

RenewalMeasure renewal_measure(const LevyMeasure& levy, double x_max, const RenewalOptions& opts = {});

/// Ψ(x) = C ∫_{[0, x]} e^{(alpha - beta) y} U(dy).
class EnergyPotential {
 public:
  EnergyPotential(const FragmentationModel& model, const RenewalMeasure& u);

  double operator()(double x) const;
  double cost_constant() const { return cost_; }
  double exponent() const { return theta_; }

 private:
  const RenewalMeasure* u_;
  double cost_;
  double theta_;
  std::vector<double> prefix_;  // atomic backends: running weighted sums
};

/// Law of ξ at its first passage above `level`:
/// P(ξ_T ∈ dz) = ∫_{[0, level]} Π(dz - y) U(dy), z > level.
class OvershootLaw {
 public:
  double level() const { return level_; }
  bool is_atomic() const { return atomic_; }
  std::span<const Jump> atoms() const { return atoms_; }

  /// P(ξ_T > z).
  double survival(double z) const;
  double cdf(double z) const { return total_mass() - survival(z); }
  double total_mass() const;
  /// E[g(ξ_T); ξ_T <= z_hi] with the closed tie convention.
  double expectation(const std::function<double(double)>& g, double z_hi) const;

 private:
  friend OvershootLaw overshoot_law(const LevyMeasure&, const RenewalMeasure&, double);

  double survival_from_bins(double z) const;

  double level_ = 0.0;
  bool atomic_ = true;
  std::vector<Jump> atoms_;  // x = position, mass = probability
  std::vector<double> atom_cdf_;
  const LevyMeasure* levy_ = nullptr;
  const RenewalMeasure* u_ = nullptr;
};

/// Both arguments must outlive the returned law.
OvershootLaw overshoot_law(const LevyMeasure& levy, const RenewalMeasure& u, double level);

}  // namespace fragopt
