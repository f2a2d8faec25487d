#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fragopt/energy.hpp"

namespace fragopt {

enum class BoundaryFlag { Interior, AtEta0, AtOne };
std::string_view to_string(BoundaryFlag f);

struct SweepPoint {
  double eta = 1.0;
  double ell_eta = 0.0;
  double energy = 0.0;
  double error = 0.0;
};

struct OptimizeOptions {
  /// sweep size, endpoints included
  std::size_t n_points = 41;
  /// smallest nonzero ℓ(η) of the sweep, as a fraction of ℓ(η0)
  double ell_floor = 1e-3;
  /// golden-section stops once the ℓ bracket is below tol·ℓ(η0)
  double tol = 1e-8;
  RenewalOptions renewal;
};

struct OptimizationResult {
  double eta0 = 1.0;
  double eta_star = 1.0;
  double ell_star = 0.0;
  double energy_star = 0.0;
  double energy_error = 0.0;
  BoundaryFlag boundary_flag = BoundaryFlag::AtEta0;
  /// F1 (device 1 down to eta0) and F2 (device 2 only)
  double energy_first = 0.0;
  double energy_second = 0.0;
  std::size_t evaluations = 0;
  std::vector<SweepPoint> sweep_table;
};

/// E(E(η, η0)) at ℓ(η) = 0, then n_points - 1 geometric points from
/// ell_floor·ℓ(η0) up to ℓ(η0). The η = 1 point is the second-only
/// procedure, the η = η0 point is first-only.
std::vector<SweepPoint> sweep(const Device& d1, const Device& d2, double eta0, const OptimizeOptions& opts = {});
std::vector<SweepPoint> sweep(const ModelSpec& m1, const ModelSpec& m2, double eta0, const OptimizeOptions& opts = {});

/// Best-found minimizer over η ∈ [η0, 1]: golden-section search in ℓ(η)
/// around the best sweep point, no search when that point is an endpoint.
/// Energies within their combined error bounds tie; ties go to AtEta0, then
/// AtOne, then the larger η.
OptimizationResult minimize_eta(const Device& d1, const Device& d2, double eta0, const OptimizeOptions& opts = {});
OptimizationResult minimize_eta(const ModelSpec& m1, const ModelSpec& m2, double eta0,
                                const OptimizeOptions& opts = {});

/// Columns eta, ell_eta, energy.
void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& table);
/// One JSON object, sweep table left out.
std::string result_json(const OptimizationResult& r);

}  // namespace fragopt
