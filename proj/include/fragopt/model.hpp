#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fragopt {

inline constexpr double kMassTol = 1e-12;
inline constexpr double kRootTol = 1e-10;
inline constexpr double kTieTol = 1e-12;

/// Log-size comparison shared by every module: a fragment at ξ = -log(size)
/// is still broken when ξ <= level (size >= threshold), and has passed the
/// level only when ξ > level. The slack absorbs rounding in sums of logs.
inline bool at_or_below(double xi, double level) {
  return xi <= level + kTieTol * std::max(1.0, std::abs(level));
}
inline bool passed(double xi, double level) { return !at_or_below(xi, level); }

/// log(1/a)
inline double ell(double a) { return -std::log(a); }

/// Nonincreasing finite sequence of child mass fractions. Zero entries are
/// dropped (dust).
class MassPartition {
 public:
  MassPartition() = default;
  explicit MassPartition(std::vector<double> masses);

  std::span<const double> masses() const { return masses_; }
  std::size_t size() const { return masses_.size(); }
  double total() const;
  /// (1, 0, 0, ...), forbidden as a dislocation atom.
  bool is_unit() const;

 private:
  std::vector<double> masses_;
};

struct DislocationAtom {
  MassPartition partition;
  double weight = 0.0;
  /// Only used by PerAtomCost.
  std::optional<double> cost;
};

struct FiniteDiscrete {
  std::vector<DislocationAtom> atoms;
};

/// f(x) = c x^{-1-rho} on (0, 1/2]; infinite total mass.
struct PowerLaw {
  double c = 1.0;
  double rho = 0.5;
};

/// Any density with finite total mass on (0, 1/2].
struct Bounded {
  std::string label;
  std::function<double(double)> density;

  static Bounded uniform(double c);
  /// Piecewise linear through (xs[i], fs[i]); xs increasing in (0, 1/2].
  /// Constant extrapolation outside the table.
  static Bounded table(std::vector<double> xs, std::vector<double> fs);
};

/// Binary splits (1 - x, x), x in (0, 1/2], with intensity f(x) dx.
struct BinaryDensity {
  std::variant<PowerLaw, Bounded> family;

  double operator()(double x) const;
  bool infinite_activity() const { return std::holds_alternative<PowerLaw>(family); }
};

using DislocationMeasure = std::variant<FiniteDiscrete, BinaryDensity>;

/// phi(s) = sum s_n^beta_cost - 1
struct PotentialCost {
  double beta_cost = 1.0;
};
/// Cost read from DislocationAtom::cost.
struct PerAtomCost {};
struct CustomCost {
  std::string label;
  std::function<double(const MassPartition&)> eval;
};

using CostFunction = std::variant<PotentialCost, PerAtomCost, CustomCost>;

struct ModelSpec {
  std::string name;
  DislocationMeasure nu;
  CostFunction phi;
  double beta = 1.0;
};

// Raw characteristics of a dislocation measure.
double kappa(const DislocationMeasure& nu, double q);
double lower_abscissa(const DislocationMeasure& nu);
double nu_total_mass(const DislocationMeasure& nu);
double malthusian_alpha(const DislocationMeasure& nu);
double cost_constant(const DislocationMeasure& nu, const CostFunction& phi);
/// mu_1 = ∫ sum_j s_j^alpha log(1/s_j) nu(ds), the mean jump of the tilted
/// subordinator.
double tilted_mean_jump(const DislocationMeasure& nu, double alpha);

double evaluate_cost(const CostFunction& phi, const MassPartition& s, const DislocationAtom* atom = nullptr);

/// ∫_0^{1/2} g(x) f(x) dx. `scale` is the smallest length on which g varies
/// (for instance 1/q for x^q-type integrands). `exponent` is the power of x
/// that g(x) f(x) behaves like at 0; by default g is assumed O(x).
double integrate_binary(const BinaryDensity& nu, const std::function<double(double)>& g,
                        double scale = 1.0, std::optional<double> exponent = std::nullopt,
                        double rel_tol = 1e-10);

/// A validated fragmentation model with its derived scalars cached.
/// Immutable after construction.
class FragmentationModel {
 public:
  explicit FragmentationModel(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }
  const DislocationMeasure& nu() const { return spec_.nu; }
  const CostFunction& phi() const { return spec_.phi; }
  double beta() const { return spec_.beta; }

  double alpha() const { return alpha_; }
  double cost_constant() const { return cost_; }
  /// The mean jump ∫ x Π(dx); the normalizer that makes the stationary
  /// overshoot a probability.
  double mean_jump() const { return mean_jump_; }
  /// m(alpha) = ∫ sum s^alpha log(1/s^alpha) nu(ds) = alpha * mean_jump().
  double m_alpha() const { return alpha_ * mean_jump_; }
  double p_lower() const { return p_lower_; }
  double nu_mass() const { return nu_mass_; }
  bool finite_activity() const { return std::isfinite(nu_mass_); }

  const FiniteDiscrete* finite() const { return std::get_if<FiniteDiscrete>(&spec_.nu); }
  const BinaryDensity* binary() const { return std::get_if<BinaryDensity>(&spec_.nu); }

  double kappa(double q) const { return fragopt::kappa(spec_.nu, q); }
  /// phi(atom) for each FiniteDiscrete atom, in atom order.
  std::span<const double> atom_costs() const { return atom_costs_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  ModelSpec spec_;
  double alpha_ = 0.0;
  double cost_ = 0.0;
  double mean_jump_ = 0.0;
  double p_lower_ = 0.0;
  double nu_mass_ = 0.0;
  std::vector<double> atom_costs_;
  std::vector<std::string> warnings_;
};

double kappa(const FragmentationModel& model, double q);
double malthusian_alpha(const FragmentationModel& model);
double cost_constant(const FragmentationModel& model);
double m_alpha(const FragmentationModel& model);

struct DiagnosticsReport {
  std::string name;
  bool valid = true;
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  std::optional<double> alpha;
  std::optional<double> cost_constant;
  std::optional<double> m_alpha;
  std::optional<double> mean_jump;
  double p_lower = 0.0;
  bool lattice = false;
  std::optional<double> lattice_span;
  bool infinite_activity = false;
};

/// Checks every model invariant without throwing; failures land in the report.
DiagnosticsReport validate(const ModelSpec& spec);

}  // namespace fragopt
