#include "fragopt/model.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "fragopt/error.hpp"
#include "fragopt/quadrature.hpp"

namespace fragopt {
namespace {

constexpr const char* kModule = "model";

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidModel, kModule, msg); }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// 1 - (1-x)^q without cancellation for small x.
double one_minus_pow_complement(double x, double q) { return -std::expm1(q * std::log1p(-x)); }

}  // namespace

MassPartition::MassPartition(std::vector<double> masses) {
  for (double m : masses) {
    if (!std::isfinite(m) || m < 0.0) invalid("mass fractions must be finite and nonnegative");
  }
  std::erase(masses, 0.0);
  std::sort(masses.begin(), masses.end(), std::greater<>());
  masses_ = std::move(masses);
  if (total() > 1.0 + kMassTol) invalid("mass partition sums to more than 1");
}

double MassPartition::total() const { return std::accumulate(masses_.begin(), masses_.end(), 0.0); }

bool MassPartition::is_unit() const { return masses_.size() == 1 && std::abs(masses_[0] - 1.0) <= kMassTol; }

Bounded Bounded::uniform(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) invalid("uniform density needs c > 0");
  return Bounded{"uniform", [c](double) { return c; }};
}

Bounded Bounded::table(std::vector<double> xs, std::vector<double> fs) {
  if (xs.size() != fs.size() || xs.empty()) invalid("density table needs matching nonempty columns");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0 && xs[i] <= 0.5)) invalid("density table abscissae must lie in (0, 1/2]");
    if (i > 0 && !(xs[i] > xs[i - 1])) invalid("density table abscissae must increase");
    if (!(fs[i] >= 0.0) || !std::isfinite(fs[i])) invalid("density table values must be finite and >= 0");
  }
  auto eval = [xs = std::move(xs), fs = std::move(fs)](double x) {
    if (x <= xs.front()) return fs.front();
    if (x >= xs.back()) return fs.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return fs[i - 1] + t * (fs[i] - fs[i - 1]);
  };
  return Bounded{"table", std::move(eval)};
}

double BinaryDensity::operator()(double x) const {
  return std::visit(overloaded{[x](const PowerLaw& p) { return p.c * std::pow(x, -1.0 - p.rho); },
                               [x](const Bounded& b) { return b.density(x); }},
                    family);
}

double integrate_binary(const BinaryDensity& nu, const std::function<double(double)>& g, double scale,
                        std::optional<double> exponent, double rel_tol) {
  const double e = exponent.value_or(
      std::visit(overloaded{[](const PowerLaw& p) { return -p.rho; }, [](const Bounded&) { return 0.0; }},
                 nu.family));
  auto integrand = [&](double x) {
    // below 1e-150 the density may overflow; the contribution is negligible
    if (x <= 1e-150) return 0.0;
    return g(x) * nu(x);
  };
  // Geometric pieces towards 0 resolve whatever happens on the scale of `scale`;
  // the innermost piece is handled by the algebraic substitution.
  const double x_min = std::min(1e-3, 1e-3 * scale);
  std::vector<double> pts{0.5};
  while (pts.back() > x_min) pts.push_back(pts.back() / 4.0);
  std::reverse(pts.begin(), pts.end());
  quad::Options opts;
  opts.rel_tol = rel_tol;
  // integrands that cancel to rounding noise (kappa at a conservative root)
  opts.abs_tol = 1e-15;
  double total = quad::integrate_algebraic_left(integrand, 0.0, pts.front(), e, opts);
  total += quad::integrate_pieces(integrand, pts, opts);
  return total;
}

double lower_abscissa(const DislocationMeasure& nu) {
  return std::visit(overloaded{[](const FiniteDiscrete&) { return -std::numeric_limits<double>::infinity(); },
                               [](const BinaryDensity& b) {
                                 return std::visit(overloaded{[](const PowerLaw& p) { return p.rho; },
                                                              [](const Bounded&) { return -1.0; }},
                                                   b.family);
                               }},
                    nu);
}

double nu_total_mass(const DislocationMeasure& nu) {
  return std::visit(
      overloaded{[](const FiniteDiscrete& d) {
                   double m = 0.0;
                   for (const auto& a : d.atoms) m += a.weight;
                   return m;
                 },
                 [](const BinaryDensity& b) {
                   if (b.infinite_activity()) return std::numeric_limits<double>::infinity();
                   return integrate_binary(b, [](double) { return 1.0; }, 1.0, 0.0);
                 }},
      nu);
}

double kappa(const DislocationMeasure& nu, double q) {
  const double p = lower_abscissa(nu);
  if (!(q > p)) {
    std::ostringstream os;
    os << "kappa(" << q << ") diverges; the finiteness abscissa is " << p;
    throw Error(ErrorCode::DivergentIntegral, kModule, os.str());
  }
  if (const auto* d = std::get_if<FiniteDiscrete>(&nu)) {
    double k = 0.0;
    for (const auto& a : d->atoms) {
      double s = 0.0;
      for (double m : a.partition.masses()) s += std::pow(m, q);
      k += a.weight * (1.0 - s);
    }
    return k;
  }
  const auto& b = std::get<BinaryDensity>(nu);
  const double scale = 1.0 / std::max(1.0, std::abs(q));
  if (const auto* pl = std::get_if<PowerLaw>(&b.family)) {
    // The x^q part is done in closed form; what is left is O(x) at 0.
    const double big = integrate_binary(b, [q](double x) { return one_minus_pow_complement(x, q); }, scale);
    return big - pl->c * std::pow(0.5, q - pl->rho) / (q - pl->rho);
  }
  return integrate_binary(
      b, [q](double x) { return one_minus_pow_complement(x, q) - std::pow(x, q); }, scale, std::min(0.0, q));
}

double malthusian_alpha(const DislocationMeasure& nu) {
  // Conservative measures have kappa(1) = 0 exactly; the root finder would
  // only return 1 up to its tolerance.
  if (std::holds_alternative<BinaryDensity>(nu)) return 1.0;
  const auto& atoms = std::get<FiniteDiscrete>(nu).atoms;
  if (std::all_of(atoms.begin(), atoms.end(),
                  [](const DislocationAtom& a) { return std::abs(a.partition.total() - 1.0) <= kMassTol; })) {
    return 1.0;
  }
  const double p = lower_abscissa(nu);
  double lo = std::max(p + 1e-6, -64.0);
  double hi = 64.0;
  if (std::holds_alternative<BinaryDensity>(nu) && !std::get<BinaryDensity>(nu).infinite_activity()) {
    // kappa(0) = -(total mass) < 0, and it avoids the x^{-1} edge of the domain
    lo = 0.0;
  }
  double k_lo = kappa(nu, lo);
  double k_hi = kappa(nu, hi);
  if (!(k_lo < 0.0) || !(k_hi > 0.0)) {
    if (std::abs(k_lo) <= kRootTol) return lo;
    if (std::abs(k_hi) <= kRootTol) return hi;
    std::ostringstream os;
    os << "kappa has constant sign on [" << lo << ", " << hi << "]: kappa(lo)=" << k_lo
       << ", kappa(hi)=" << k_hi;
    throw Error(ErrorCode::NoRoot, kModule, os.str());
  }
  // Bisection until the bracket is narrow, then Illinois-style secant steps
  // that never leave the bracket.
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    const double k = kappa(nu, mid);
    if (k < 0.0) {
      lo = mid;
      k_lo = k;
    } else {
      hi = mid;
      k_hi = k;
    }
  }
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    double x = 0.5 * (lo + hi);
    if (std::isfinite(k_lo) && std::isfinite(k_hi) && k_hi != k_lo) x = lo - k_lo * (hi - lo) / (k_hi - k_lo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const double k = kappa(nu, x);
    if (k == 0.0 || (std::abs(k) <= 1e-3 * kRootTol) || hi - lo < 1e-15 * std::max(1.0, std::abs(x))) return x;
    if (k < 0.0) {
      lo = x;
      k_lo = k;
      if (side == -1) k_hi *= 0.5;
      side = -1;
    } else {
      hi = x;
      k_hi = k;
      if (side == 1) k_lo *= 0.5;
      side = 1;
    }
  }
  const double x = 0.5 * (lo + hi);
  if (std::abs(kappa(nu, x)) > kRootTol) throw Error(ErrorCode::NoRoot, kModule, "root refinement stalled");
  return x;
}

double evaluate_cost(const CostFunction& phi, const MassPartition& s, const DislocationAtom* atom) {
  return std::visit(overloaded{[&](const PotentialCost& p) {
                                 double v = -1.0;
                                 for (double m : s.masses()) v += std::pow(m, p.beta_cost);
                                 return v;
                               },
                               [&](const PerAtomCost&) {
                                 if (atom == nullptr || !atom->cost) invalid("per-atom cost missing for an atom");
                                 return *atom->cost;
                               },
                               [&](const CustomCost& c) { return c.eval(s); }},
                    phi);
}

double cost_constant(const DislocationMeasure& nu, const CostFunction& phi) {
  if (const auto* d = std::get_if<FiniteDiscrete>(&nu)) {
    double c = 0.0;
    for (const auto& a : d->atoms) c += a.weight * evaluate_cost(phi, a.partition, &a);
    return c;
  }
  const auto& b = std::get<BinaryDensity>(nu);
  if (std::holds_alternative<PerAtomCost>(phi)) invalid("per-atom costs need a finite discrete measure");
  if (const auto* p = std::get_if<PotentialCost>(&phi)) return -kappa(nu, p->beta_cost);
  const auto& custom = std::get<CustomCost>(phi);
  return integrate_binary(b, [&](double x) { return custom.eval(MassPartition({1.0 - x, x})); });
}

double tilted_mean_jump(const DislocationMeasure& nu, double alpha) {
  if (const auto* d = std::get_if<FiniteDiscrete>(&nu)) {
    double mu = 0.0;
    for (const auto& a : d->atoms) {
      for (double m : a.partition.masses()) mu += a.weight * std::pow(m, alpha) * (-std::log(m));
    }
    return mu;
  }
  const auto& b = std::get<BinaryDensity>(nu);
  const double p = lower_abscissa(nu);
  if (!(alpha > p)) throw Error(ErrorCode::DivergentIntegral, kModule, "mean jump diverges for alpha <= p_lower");
  const double e = std::visit(overloaded{[&](const PowerLaw& pl) { return std::min(-pl.rho, alpha - 1.0 - pl.rho); },
                                         [&](const Bounded&) { return std::min(0.0, alpha); }},
                              b.family);
  return integrate_binary(
      b,
      [alpha](double x) {
        return std::pow(1.0 - x, alpha) * (-std::log1p(-x)) + std::pow(x, alpha) * (-std::log(x));
      },
      1.0, e - 1e-3);
}

FragmentationModel::FragmentationModel(ModelSpec spec) : spec_(std::move(spec)) {
  if (!(spec_.beta > 0.0) || !std::isfinite(spec_.beta)) invalid("beta must be a positive real");
  if (const auto* d = std::get_if<FiniteDiscrete>(&spec_.nu)) {
    if (d->atoms.empty()) invalid("dislocation measure has no atoms");
    for (const auto& a : d->atoms) {
      if (!(a.weight > 0.0) || !std::isfinite(a.weight)) invalid("atom weights must be positive");
      if (a.partition.is_unit()) invalid("the atom (1, 0, ...) is forbidden");
    }
  } else {
    const auto& b = std::get<BinaryDensity>(spec_.nu);
    if (const auto* pl = std::get_if<PowerLaw>(&b.family)) {
      if (!(pl->c > 0.0)) invalid("power-law density needs c > 0");
      if (!(pl->rho > 0.0 && pl->rho < 1.0)) invalid("power-law exponent rho must lie in (0, 1)");
    } else if (!std::get<Bounded>(b.family).density) {
      invalid("bounded density has no evaluator");
    }
  }
  if (const auto* p = std::get_if<PotentialCost>(&spec_.phi)) {
    if (!(p->beta_cost >= 0.0)) invalid("beta_cost must be >= 0");
  }
  if (const auto* c = std::get_if<CustomCost>(&spec_.phi)) {
    if (!c->eval) invalid("custom cost has no evaluator");
  }

  p_lower_ = lower_abscissa(spec_.nu);
  nu_mass_ = nu_total_mass(spec_.nu);
  if (!(nu_mass_ > 0.0)) invalid("dislocation measure has zero mass");
  alpha_ = malthusian_alpha(spec_.nu);
  cost_ = fragopt::cost_constant(spec_.nu, spec_.phi);
  mean_jump_ = tilted_mean_jump(spec_.nu, alpha_);
  if (!(mean_jump_ > 0.0) || !std::isfinite(mean_jump_)) {
    throw Error(ErrorCode::DivergentIntegral, kModule, "mean jump of the tagged fragment is not finite and positive");
  }
  if (const auto* d = std::get_if<FiniteDiscrete>(&spec_.nu)) {
    for (const auto& a : d->atoms) atom_costs_.push_back(evaluate_cost(spec_.phi, a.partition, &a));
  }
  if (cost_ <= 0.0) {
    std::ostringstream os;
    os << "cost constant C = " << cost_ << " <= 0; mean energies lose their cost interpretation";
    warnings_.push_back(os.str());
  }
  if (!(spec_.beta < alpha_)) {
    std::ostringstream os;
    os << "beta = " << spec_.beta << " is not below alpha = " << alpha_;
    warnings_.push_back(os.str());
  }
}

double kappa(const FragmentationModel& model, double q) { return model.kappa(q); }
double malthusian_alpha(const FragmentationModel& model) { return model.alpha(); }
double cost_constant(const FragmentationModel& model) { return model.cost_constant(); }
double m_alpha(const FragmentationModel& model) { return model.m_alpha(); }

}  // namespace fragopt
