#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fragopt/energy.hpp"
#include "fragopt/levy.hpp"
#include "fragopt/model.hpp"

namespace fragopt {

// ---------------------------------------------------------------- small thresholds

struct SmallThresholdLimit {
  /// lim η^{α-β} E(E(η)) = C / ((α-β) μ₁).
  double value = 0.0;
  /// Same with m(α) = α μ₁ in place of μ₁.
  double value_literal = 0.0;
  /// Π lattice: η^{α-β}Ψ(ℓ(η)) oscillates and has no limit.
  bool lattice = false;
  std::vector<std::string> warnings;
};

/// Throws InvalidModel unless beta < alpha.
SmallThresholdLimit small_threshold_limit(const FragmentationModel& model);

/// Limit law of ξ_T - ℓ as ℓ → ∞: density Π((u,∞)) / μ₁.
class StationaryOvershoot {
 public:
  explicit StationaryOvershoot(LevyMeasure levy);

  double normalizer() const { return levy_->mean(); }
  double density(double u) const;
  double cdf(double u) const;
  /// ∫ density, by quadrature of the tail rather than the closed form.
  double total_mass() const;
  const LevyMeasure& levy() const { return *levy_; }

 private:
  std::shared_ptr<const LevyMeasure> levy_;
};

StationaryOvershoot stationary_overshoot(const FragmentationModel& model);

/// F_λ, D_λ and D̂_λ written against Π̄ directly: m(α) M(du) is taken as
/// Π((u, ∞)) du, which is exact with the normalizer μ₁.
struct GapConstants {
  double F = 0.0;
  double D = 0.0;
  double D_hat = 0.0;
};

/// ∫_0^λ e^{θu} Ψ_pot(λ - u) Π_over((u, ∞)) du.
double gap_integral(const LevyMeasure& over, double theta, const Device& pot, double lambda_gap);

/// Devices must cover [0, lambda_gap].
GapConstants constants_F_D(const Device& d1, const Device& d2, double lambda_gap);
GapConstants constants_F_D(const ModelSpec& m1, const ModelSpec& m2, double lambda_gap,
                           const RenewalOptions& opts = {});

/// One evaluated inequality. margin >= 0 means it holds at this eta. In the
/// "for every M" cases margin is `scaled` itself, the largest M that works.
/// `scaled` is the quantity the theorem controls, e.g. for the first-only
/// comparison (E(E(η,η0)) - E(E(η0))) / E(E(η)).
struct TheoremRow {
  double eta = 0.0;
  std::string theorem;  // "vs_first", "vs_second" or "remark"
  std::string case_tag;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double scaled = 0.0;
  /// Exact E(E(η)) (or its hat version) over the Tauberian or renewal proxy
  /// the theorems allow in its place.
  double proxy_ratio = 0.0;
};

struct TheoremReport {
  std::vector<TheoremRow> rows;
  /// Per theorem: the largest grid eta from which the inequality holds at
  /// every grid point further out (smaller eta for small thresholds, closer
  /// to 1 for large ones).
  std::optional<double> holds_from_vs_first;
  std::optional<double> holds_from_vs_second;
  double eps_first = 0.0;
  double eps_second = 0.0;
};

/// eta0 = eta e^{-lambda_gap}; epsilons are eps_fraction times the width the
/// theorems allow.
TheoremReport check_small_threshold_theorems(const Device& d1, const Device& d2, double lambda_gap,
                                             const std::vector<double>& eta_grid, double eps_fraction = 0.5);
TheoremReport check_small_threshold_theorems(const ModelSpec& m1, const ModelSpec& m2, double lambda_gap,
                                             const std::vector<double>& eta_grid, double eps_fraction = 0.5,
                                             const RenewalOptions& opts = {});

/// Columns eta, lhs, rhs, margin, case_tag (case_tag is "theorem/case").
void write_report_csv(std::ostream& os, const TheoremReport& report);

// ---------------------------------------------------------------- decision table

enum class Procedure { F1, F2, F12 };
std::string_view to_string(Procedure p);

struct ComparisonVerdict {
  bool determined = false;
  /// best first
  std::array<Procedure, 3> order{Procedure::F1, Procedure::F12, Procedure::F2};
  /// 1..6, 0 when undetermined
  int row = 0;
  std::string rationale;
};

/// Ordering predicted for small thresholds by the exponents alone.
ComparisonVerdict corollary_verdict(double alpha, double beta, double alpha_hat, double beta_hat);

struct EmpiricalOrdering {
  double e12 = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
  /// e12 - e1, e12 - e2 and e1 - e2 from the cancellation-free forms
  double vs_first = 0.0;
  double vs_second = 0.0;
  double first_vs_second = 0.0;
  std::array<Procedure, 3> order{};
};

/// Energies of F12 at cfg, F1 and F2 down to cfg.eta0, ranked by the three
/// signed differences.
EmpiricalOrdering empirical_ordering(const Device& d1, const Device& d2, const TwoStepConfig& cfg);

// ---------------------------------------------------------------- large thresholds

/// 10^0 .. 10^8, eight points per decade.
std::vector<double> default_q_grid();

struct RvIndex {
  double rho = 0.0;
  /// largest deviation of a local slope in the top decade from rho
  double residual = 0.0;
  bool not_rv = false;
};

/// Log-log slope of the tilted exponent over the top decade of q_grid.
RvIndex rv_index(const FragmentationModel& model, const std::vector<double>& q_grid = default_q_grid());

/// μ(dy) = (sin ρπ / π) dy / ((1+y) y^ρ) on (0, ∞).
class DynkinLamperti {
 public:
  explicit DynkinLamperti(double rho);
  double rho() const { return rho_; }
  double density(double y) const;
  double cdf(double y) const;
  double quantile(double p) const;
  /// Quadrature after power substitutions on (0,1] and, with y -> 1/y, on [1, ∞).
  double total_mass() const;

 private:
  double rho_;
};

DynkinLamperti dynkin_lamperti_density(double rho);

struct GammaConstants {
  double A = 0.0;
  double A_hat = 0.0;
  double B = 0.0;
};

GammaConstants gamma_constants(double rho, double rho_hat, double gamma_exp);

enum class QLimit { Finite, Zero, Infinite };
std::string_view to_string(QLimit q);

/// Bounds on φ̂(q)/φ(q) as q → ∞ (untilted exponents).
struct QBounds {
  double q_minus = 0.0;
  double q_plus = 0.0;
  QLimit limit = QLimit::Finite;
  /// log-log slope of the ratio over the top two decades
  double slope = 0.0;
};

QBounds q_bounds(const FragmentationModel& m1, const FragmentationModel& m2,
                 const std::vector<double>& q_grid = default_q_grid());

enum class InfEff { FirstInfEff, SecondInfEff, Undetermined };
std::string_view to_string(InfEff v);

struct InfEffVerdict {
  InfEff verdict = InfEff::Undetermined;
  RvIndex rv1;
  RvIndex rv2;
  QBounds q;
  /// Ĉ / C, the threshold Q± is compared with
  double cost_ratio = 0.0;
};

/// Throws NotRV when either exponent fails the regular variation check.
InfEffVerdict inf_efficiency(const FragmentationModel& m1, const FragmentationModel& m2);

struct LargeThresholdConstants {
  double rho = 0.0;
  double rho_hat = 0.0;
  double Q_minus = 0.0;
  double Q_plus = 0.0;
  GammaConstants gamma;
};

/// eta0 = eta^gamma_exp, eta increasing towards 1. E(Ê(η)) and E(E(η)) are
/// evaluated exactly; their Tauberian proxies appear in proxy_ratio.
TheoremReport check_large_threshold_theorems(const Device& d1, const Device& d2, double gamma_exp,
                                             const std::vector<double>& eta_grid, double eps_fraction = 0.5);
/// Unless opts.resolution is set, the renewal bins shrink so that about ten fit
/// below ℓ of the largest eta.
TheoremReport check_large_threshold_theorems(const ModelSpec& m1, const ModelSpec& m2, double gamma_exp,
                                             const std::vector<double>& eta_grid, double eps_fraction = 0.5,
                                             const RenewalOptions& opts = {});

LargeThresholdConstants large_threshold_constants(const FragmentationModel& m1, const FragmentationModel& m2,
                                                  double gamma_exp);

/// U([0,x]) φ̃(1/x) Γ(1+ρ), which tends to 1 as x → 0 under regular variation.
double tauberian_ratio(const Device& d, double x, double rho);

}  // namespace fragopt
