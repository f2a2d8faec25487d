#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string_view>
#include <vector>

#include "fragopt/levy.hpp"
#include "fragopt/model.hpp"
#include "fragopt/renewal.hpp"

namespace fragopt {

enum class EnergyMethod { Quadrature, FirstPassageMC, BranchingTreeMC };
std::string_view to_string(EnergyMethod m);

struct EnergyEstimate {
  double value = 0.0;
  /// Standard error for Monte Carlo, a rounding/estimation bound otherwise.
  double error = 0.0;
  EnergyMethod method = EnergyMethod::Quadrature;
};

/// Standard runs device 1 down to eta and device 2 down to eta0.
/// FirstDeviceSkipped is the "1+" procedure: device 2 only.
enum class TwoStepMode { Standard, FirstDeviceSkipped };

struct TwoStepConfig {
  double eta = 1.0;
  double eta0 = 1.0;
  TwoStepMode mode = TwoStepMode::Standard;

  static TwoStepConfig from_gap(double eta, double lambda_gap);
  static TwoStepConfig from_ratio(double eta, double gamma_exp);
  /// The second-device-only procedure, down to eta0.
  static TwoStepConfig second_only(double eta0);

  double ell_eta() const { return ell(eta); }
  double ell_eta0() const { return ell(eta0); }
  double gap() const { return ell_eta0() - ell_eta(); }
  double ratio() const { return ell_eta0() / ell_eta(); }
  /// Throws InvalidModel unless 0 < eta0 <= eta <= 1.
  void check() const;
};

/// A breaking device: a model with its tilted jump measure, renewal measure
/// and energy potential, the latter two known on [0, x_max]. Cheap to copy.
class Device {
 public:
  Device(const ModelSpec& spec, double x_max, const RenewalOptions& opts = {});
  Device(std::shared_ptr<const FragmentationModel> model, double x_max, const RenewalOptions& opts = {});

  const FragmentationModel& model() const { return *model_; }
  std::shared_ptr<const FragmentationModel> model_ptr() const { return model_; }
  const LevyMeasure& levy() const { return *levy_; }
  const RenewalMeasure& renewal() const { return *u_; }
  double x_max() const { return u_->x_max(); }
  double alpha() const { return model_->alpha(); }
  double beta() const { return model_->beta(); }

  /// Ψ(x)
  double psi(double x) const { return (*psi_)(x); }
  /// Statistical error of psi(x); zero for exact renewal backends.
  double psi_error(double x) const;
  /// Overshoot law of the tilted subordinator over `level`; refers into
  /// this device, which must outlive it.
  OvershootLaw overshoot(double level) const { return overshoot_law(*levy_, *u_, level); }

 private:
  std::shared_ptr<const FragmentationModel> model_;
  std::shared_ptr<const LevyMeasure> levy_;
  std::shared_ptr<const RenewalMeasure> u_;
  std::shared_ptr<const EnergyPotential> psi_;
};

/// x_max that covers every threshold down to eta0.
double default_x_max(double eta0);

/// E(E(eta0)) = Ψ(ℓ(eta0)).
EnergyEstimate mean_energy_single(const Device& d, double eta0);
EnergyEstimate mean_energy_single(const ModelSpec& spec, double eta0, const RenewalOptions& opts = {});
/// C times the mean of ∫ e^{(alpha-beta) ξ_t} dt over ξ <= ℓ(eta0), by
/// first-passage simulation.
EnergyEstimate mean_energy_single_mc(const Device& d, double eta0, std::size_t n_replicas, std::uint64_t seed,
                                     double trunc_eps = 0.0);

/// Expected two-step energy by integrating the overshoot law of device 1.
EnergyEstimate mean_energy_two_step(const Device& d1, const Device& d2, const TwoStepConfig& cfg);
EnergyEstimate mean_energy_two_step(const ModelSpec& m1, const ModelSpec& m2, const TwoStepConfig& cfg,
                                    const RenewalOptions& opts = {});
/// Same formula with the overshoot drawn by first-passage simulation.
EnergyEstimate mean_energy_two_step_mc(const Device& d1, const Device& d2, const TwoStepConfig& cfg,
                                       std::size_t n_replicas, std::uint64_t seed, double trunc_eps = 0.0);

/// E(E(eta, eta0)) - E(E(1+, eta0)) from the three-term decomposition.
double energy_difference_vs_second(const Device& d1, const Device& d2, const TwoStepConfig& cfg);
/// E(E(eta, eta0)) - E(E(eta0, eta0)).
double energy_difference_vs_first(const Device& d1, const Device& d2, const TwoStepConfig& cfg);

struct EnergyRow {
  double eta = 0.0;
  double eta0 = 0.0;
  EnergyEstimate estimate;
};
/// Columns eta, eta0, method, value, error.
void write_energy_csv(std::ostream& os, const std::vector<EnergyRow>& rows);

}  // namespace fragopt
