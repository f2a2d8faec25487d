#include <sstream>

#include "fragopt/error.hpp"
#include "fragopt/levy.hpp"
#include "fragopt/model.hpp"

namespace fragopt {

DiagnosticsReport validate(const ModelSpec& spec) {
  DiagnosticsReport r;
  r.name = spec.name;
  // Structural checks first, so that every problem is listed rather than the
  // first one the constructor trips on.
  if (const auto* d = std::get_if<FiniteDiscrete>(&spec.nu)) {
    if (d->atoms.empty()) r.violations.push_back("dislocation measure has no atoms");
    for (std::size_t i = 0; i < d->atoms.size(); ++i) {
      const auto& a = d->atoms[i];
      std::ostringstream os;
      os << "atom " << i << ": ";
      if (a.partition.is_unit()) r.violations.push_back(os.str() + "the partition (1, 0, ...) is forbidden");
      if (!(a.weight > 0.0) || !std::isfinite(a.weight)) r.violations.push_back(os.str() + "weight must be positive");
      if (a.partition.total() > 1.0 + kMassTol) r.violations.push_back(os.str() + "child masses exceed 1");
      if (std::holds_alternative<PerAtomCost>(spec.phi) && !a.cost) {
        r.violations.push_back(os.str() + "per-atom cost missing");
      }
    }
  } else {
    const auto& b = std::get<BinaryDensity>(spec.nu);
    r.infinite_activity = b.infinite_activity();
    if (const auto* p = std::get_if<PowerLaw>(&b.family)) {
      if (!(p->rho > 0.0 && p->rho < 1.0)) r.violations.push_back("power-law rho must lie in (0, 1), else ∫(1-s1) nu(ds) diverges");
      if (!(p->c > 0.0)) r.violations.push_back("power-law c must be positive");
    }
  }
  if (!(spec.beta > 0.0)) r.violations.push_back("beta must be positive");
  if (!r.violations.empty()) {
    r.valid = false;
    return r;
  }
  try {
    const FragmentationModel model(spec);
    r.alpha = model.alpha();
    r.cost_constant = model.cost_constant();
    r.m_alpha = model.m_alpha();
    r.mean_jump = model.mean_jump();
    r.p_lower = model.p_lower();
    r.infinite_activity = !model.finite_activity();
    r.warnings = model.warnings();
    if (model.finite()) {
      const LevyMeasure levy = tilted_levy_measure(model);
      r.lattice_span = levy.lattice_span();
      r.lattice = r.lattice_span.has_value();
    }
    const double k = model.kappa(model.alpha());
    if (std::abs(k) > kRootTol) {
      std::ostringstream os;
      os << "kappa(alpha) = " << k << " exceeds the root tolerance";
      r.violations.push_back(os.str());
    }
  } catch (const Error& e) {
    r.violations.push_back(e.what());
  }
  r.valid = r.violations.empty();
  return r;
}

}  // namespace fragopt
