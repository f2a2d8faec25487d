#include "fragopt/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "fragopt/csv.hpp"
#include "fragopt/error.hpp"
#include "fragopt/parallel.hpp"
#include "fragopt/quadrature.hpp"

namespace fragopt {
namespace {

constexpr const char* kModule = "asymptotics";
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidModel, kModule, msg); }

// least-squares slope of ys against xs
double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

std::vector<double> top_range(const std::vector<double>& q_grid, double decades) {
  if (q_grid.size() < 3) invalid("q grid needs at least 3 points");
  const double q_max = *std::max_element(q_grid.begin(), q_grid.end());
  std::vector<double> out;
  for (double q : q_grid) {
    if (q >= q_max * std::pow(10.0, -decades) * (1.0 - 1e-12)) out.push_back(q);
  }
  std::sort(out.begin(), out.end());
  if (out.size() < 3) invalid("top of the q grid holds fewer than 3 points");
  return out;
}

// 8-point Gauss-Legendre on [a, b]
double gauss8(const std::function<double(double)>& f, double a, double b) {
  static const quad::Rule rule = quad::gauss_legendre(8);
  const double h = (b - a) / 2.0;
  const double m = (a + b) / 2.0;
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(m + h * rule.nodes[i]);
  return h * s;
}

// Sets holds_from for one theorem: walking from the grid point nearest the
// limit outward, the last eta before the first failure.
std::optional<double> holds_from(const std::vector<TheoremRow>& rows, const std::string& theorem,
                                 bool limit_is_zero) {
  std::vector<double> etas;
  for (const auto& r : rows) {
    if (r.theorem == theorem) etas.push_back(r.eta);
  }
  std::sort(etas.begin(), etas.end());
  etas.erase(std::unique(etas.begin(), etas.end()), etas.end());
  if (!limit_is_zero) std::reverse(etas.begin(), etas.end());
  std::optional<double> out;
  for (double eta : etas) {
    const bool ok = std::all_of(rows.begin(), rows.end(), [&](const TheoremRow& r) {
      return r.theorem != theorem || r.eta != eta || r.margin >= 0.0;
    });
    if (!ok) break;
    out = eta;
  }
  return out;
}

double x_max_for(double ell_max) { return std::max(1.25 * ell_max, 1e-300); }

}  // namespace

// ---------------------------------------------------------------- small thresholds

SmallThresholdLimit small_threshold_limit(const FragmentationModel& model) {
  const double a = model.alpha();
  const double b = model.beta();
  if (!(b < a)) invalid("the renewal limit needs beta < alpha for '" + model.name() + "'");
  SmallThresholdLimit out;
  out.value = model.cost_constant() / ((a - b) * model.mean_jump());
  out.value_literal = model.cost_constant() / ((a - b) * model.m_alpha());
  const auto levy = tilted_levy_measure(model);
  out.lattice = levy.lattice_span().has_value();
  if (out.lattice) {
    std::ostringstream os;
    os << "lattice jumps (span " << *levy.lattice_span() << "): eta^(alpha-beta) E(E(eta)) oscillates";
    out.warnings.push_back(os.str());
  }
  return out;
}

StationaryOvershoot::StationaryOvershoot(LevyMeasure levy)
    : levy_(std::make_shared<const LevyMeasure>(std::move(levy))) {
  if (!(levy_->mean() > 0.0 && std::isfinite(levy_->mean()))) invalid("stationary overshoot needs 0 < mu_1 < inf");
}

double StationaryOvershoot::density(double u) const { return u < 0.0 ? 0.0 : levy_->tail(u) / normalizer(); }

double StationaryOvershoot::cdf(double u) const {
  return u <= 0.0 ? 0.0 : std::min(1.0, levy_->integrated_tail(u) / normalizer());
}

double StationaryOvershoot::total_mass() const {
  const auto f = [&](double u) { return levy_->tail(u); };
  double s = 0.0;
  if (levy_->is_discrete()) {
    std::vector<double> pts{0.0};
    for (const auto& j : levy_->jumps()) pts.push_back(j.x);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i] > pts[i - 1]) s += gauss8(f, pts[i - 1], pts[i]);
    }
  } else {
    s = quad::integrate_singular(f, 0.0, 1.0, {1e-12});
    for (double a = 1.0; a < 2000.0; a *= 2.0) {
      const double piece = quad::integrate(f, a, 2.0 * a, {1e-12});
      s += piece;
      if (piece < 1e-17 * s) break;
    }
  }
  return s / normalizer();
}

StationaryOvershoot stationary_overshoot(const FragmentationModel& model) {
  return StationaryOvershoot(tilted_levy_measure(model));
}

double gap_integral(const LevyMeasure& over, double theta, const Device& pot, double lambda_gap) {
  if (!(lambda_gap > 0.0)) invalid("lambda_gap must be positive");
  if (lambda_gap > pot.x_max() * (1.0 + 1e-12)) invalid("device does not cover the gap");
  // breakpoints: jumps of Π̄ and of u -> Ψ(λ - u)
  std::vector<double> pts{0.0, lambda_gap};
  for (const auto& j : over.jumps()) {
    if (j.x > 0.0 && j.x < lambda_gap) pts.push_back(j.x);
  }
  const auto& u = pot.renewal();
  if (u.backend() == RenewalBackend::GridDensity) {
    const double h = u.step();
    for (int k = 1; k * h < lambda_gap; ++k) pts.push_back(lambda_gap - k * h);
  } else {
    for (double y : u.positions()) {
      if (y > 0.0 && y < lambda_gap) pts.push_back(lambda_gap - y);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [&](double a, double b) { return b - a <= 1e-10 * lambda_gap; }),
            pts.end());
  pts.back() = lambda_gap;
  const auto f = [&](double v) { return std::exp(theta * v) * pot.psi(lambda_gap - v) * over.tail(v); };
  double s = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    // Π̄ blows up at 0 for infinite activity
    if (i == 1 && !over.finite_activity()) {
      s += quad::integrate_singular(f, pts[0], pts[1], {1e-11});
    } else {
      s += gauss8(f, pts[i - 1], pts[i]);
    }
  }
  return s;
}

GapConstants constants_F_D(const Device& d1, const Device& d2, double lambda_gap) {
  GapConstants g;
  g.F = gap_integral(d1.levy(), d1.alpha() - d2.beta(), d2, lambda_gap);
  g.D = gap_integral(d1.levy(), d1.alpha() - d1.beta(), d1, lambda_gap);
  g.D_hat = gap_integral(d2.levy(), d2.alpha() - d2.beta(), d2, lambda_gap);
  return g;
}

GapConstants constants_F_D(const ModelSpec& m1, const ModelSpec& m2, double lambda_gap,
                           const RenewalOptions& opts) {
  const double x_max = std::max(1.0, 1.25 * lambda_gap);
  return constants_F_D(Device(m1, x_max, opts), Device(m2, x_max, opts), lambda_gap);
}

TheoremReport check_small_threshold_theorems(const Device& d1, const Device& d2, double lambda_gap,
                                             const std::vector<double>& eta_grid, double eps_fraction) {
  if (eta_grid.empty()) invalid("empty eta grid");
  if (!(eps_fraction > 0.0 && eps_fraction < 1.0)) invalid("eps_fraction must lie in (0, 1)");
  const double a = d1.alpha(), b = d1.beta(), ah = d2.alpha(), bh = d2.beta();
  if (!(b < a && bh < ah)) invalid("small-threshold comparisons need beta < alpha for both devices");
  const double c = d1.model().cost_constant();
  const double ch = d2.model().cost_constant();
  const auto k = constants_F_D(d1, d2, lambda_gap);
  const double mu1 = d1.model().mean_jump();
  const double mu2 = d2.model().mean_jump();

  TheoremReport rep;
  rep.eps_first = eps_fraction * (a - b) * k.D / c;
  rep.eps_second = eps_fraction * (ah - bh) * k.D_hat / ch;

  std::vector<std::vector<TheoremRow>> per(eta_grid.size());
  parallel_for(eta_grid.size(), [&](std::size_t i) {
    const double eta = eta_grid[i];
    const auto cfg = TwoStepConfig::from_gap(eta, lambda_gap);
    const double l = cfg.ell_eta();
    const double e = d1.psi(l);                // E(E(η))
    const double e0 = d1.psi(cfg.ell_eta0());  // E(E(η0))
    const double eh = d2.psi(l);
    const double eh0 = d2.psi(cfg.ell_eta0());
    const double diff1 = energy_difference_vs_first(d1, d2, cfg);
    const double diff2 = energy_difference_vs_second(d1, d2, cfg);
    const double e12 = e0 + diff1;
    // renewal proxies C / (η^{α-β} μ₁ (α-β))
    const double proxy1 = c / (std::pow(eta, a - b) * mu1 * (a - b));
    const double proxy2 = ch / (std::pow(eta, ah - bh) * mu2 * (ah - bh));
    auto& out = per[i];

    TheoremRow r{eta, "vs_first", "", e12, 0.0, 0.0, diff1 / e, e / proxy1};
    if (bh > b) {
      r.case_tag = "a";
      r.rhs = (rep.eps_first - (a - b) * k.D / c) * e + e0;
      r.margin = r.rhs - r.lhs;
    } else if (bh < b) {
      r.case_tag = "b";
      // every M below `scaled` works at this eta
      r.rhs = e0;
      r.margin = r.scaled;
    } else {
      r.case_tag = "c";
      const double target = (a - b) * (k.F - k.D) / c;
      r.rhs = (rep.eps_first + target) * e + e0;
      r.margin = rep.eps_first - std::abs(r.scaled - target);
    }
    out.push_back(r);

    TheoremRow s{eta, "vs_second", "", e12, 0.0, 0.0, diff2 / eh, eh / proxy2};
    if (ah > a) {
      s.case_tag = "a";
      s.rhs = (rep.eps_second - (ah - bh) * k.D_hat / ch) * eh + eh0;
      s.margin = s.rhs - s.lhs;
    } else if (ah < a) {
      s.case_tag = "b";
      s.rhs = eh0;
      s.margin = s.scaled;
    } else {
      s.case_tag = "c";
      const double target = (ah - bh) * (k.F - k.D_hat) / ch;
      s.rhs = (rep.eps_second + target) * eh + eh0;
      s.margin = rep.eps_second - std::abs(s.scaled - target);
    }
    out.push_back(s);
  });
  for (auto& v : per) rep.rows.insert(rep.rows.end(), v.begin(), v.end());
  rep.holds_from_vs_first = holds_from(rep.rows, "vs_first", true);
  rep.holds_from_vs_second = holds_from(rep.rows, "vs_second", true);
  return rep;
}

TheoremReport check_small_threshold_theorems(const ModelSpec& m1, const ModelSpec& m2, double lambda_gap,
                                             const std::vector<double>& eta_grid, double eps_fraction,
                                             const RenewalOptions& opts) {
  if (eta_grid.empty()) invalid("empty eta grid");
  const double eta_min = *std::min_element(eta_grid.begin(), eta_grid.end());
  const double x_max = std::max(1.0, x_max_for(ell(eta_min) + lambda_gap));
  return check_small_threshold_theorems(Device(m1, x_max, opts), Device(m2, x_max, opts), lambda_gap, eta_grid,
                                        eps_fraction);
}

void write_report_csv(std::ostream& os, const TheoremReport& report) {
  os << "eta,lhs,rhs,margin,case_tag\n";
  for (const auto& r : report.rows) {
    csv::row(os, {csv::num(r.eta), csv::num(r.lhs), csv::num(r.rhs), csv::num(r.margin), r.theorem + "/" + r.case_tag});
  }
}

// ---------------------------------------------------------------- decision table

std::string_view to_string(Procedure p) {
  switch (p) {
    case Procedure::F1:
      return "F1";
    case Procedure::F2:
      return "F2";
    case Procedure::F12:
      return "F12";
  }
  return "?";
}

ComparisonVerdict corollary_verdict(double alpha, double beta, double alpha_hat, double beta_hat) {
  if (!(alpha > 0.0 && beta > 0.0 && alpha_hat > 0.0 && beta_hat > 0.0)) invalid("exponents must be positive");
  if (!(beta < alpha && beta_hat < alpha_hat)) invalid("need beta < alpha and beta_hat < alpha_hat");
  using P = Procedure;
  ComparisonVerdict v;
  if (alpha_hat == alpha || beta_hat == beta) {
    v.rationale = alpha_hat == alpha ? "alpha_hat == alpha: depends on eta0/eta" : "beta_hat == beta: depends on eta0/eta";
    return v;
  }
  const double gap = alpha - beta;
  const double gap_hat = alpha_hat - beta_hat;
  const bool ah_up = alpha_hat > alpha;
  const bool bh_up = beta_hat > beta;
  auto set = [&](int row, std::array<P, 3> order, const char* why) {
    v.determined = true;
    v.row = row;
    v.order = order;
    v.rationale = why;
  };
  if (ah_up && !bh_up) {
    set(1, {P::F1, P::F12, P::F2}, "alpha_hat > alpha, beta_hat < beta");
  } else if (!ah_up && bh_up) {
    set(2, {P::F2, P::F12, P::F1}, "alpha_hat < alpha, beta_hat > beta");
  } else if (gap == gap_hat) {
    v.rationale = "alpha - beta == alpha_hat - beta_hat: no row applies";
  } else if (!ah_up) {
    if (gap < gap_hat) {
      set(3, {P::F1, P::F2, P::F12}, "alpha_hat < alpha, beta_hat < beta, alpha - beta < alpha_hat - beta_hat");
    } else {
      set(4, {P::F2, P::F1, P::F12}, "alpha_hat < alpha, beta_hat < beta, alpha - beta > alpha_hat - beta_hat");
    }
  } else {
    if (gap < gap_hat) {
      set(5, {P::F12, P::F1, P::F2}, "alpha_hat > alpha, beta_hat > beta, alpha - beta < alpha_hat - beta_hat");
    } else {
      set(6, {P::F12, P::F2, P::F1}, "alpha_hat > alpha, beta_hat > beta, alpha - beta > alpha_hat - beta_hat");
    }
  }
  return v;
}

EmpiricalOrdering empirical_ordering(const Device& d1, const Device& d2, const TwoStepConfig& cfg) {
  EmpiricalOrdering o;
  const double l0 = cfg.ell_eta0();
  o.e1 = d1.psi(l0);
  o.e2 = d2.psi(l0);
  o.vs_first = energy_difference_vs_first(d1, d2, cfg);
  o.vs_second = energy_difference_vs_second(d1, d2, cfg);
  o.first_vs_second = o.e1 - o.e2;
  o.e12 = o.e1 + o.vs_first;
  // pairwise wins; a cycle cannot occur unless two differences are zero
  std::array<std::pair<int, Procedure>, 3> score{
      {{0, Procedure::F1}, {0, Procedure::F2}, {0, Procedure::F12}}};
  auto win = [&](Procedure p) {
    for (auto& s : score) {
      if (s.second == p) ++s.first;
    }
  };
  win(o.vs_first < 0.0 ? Procedure::F12 : Procedure::F1);
  win(o.vs_second < 0.0 ? Procedure::F12 : Procedure::F2);
  win(o.first_vs_second < 0.0 ? Procedure::F1 : Procedure::F2);
  std::stable_sort(score.begin(), score.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t i = 0; i < 3; ++i) o.order[i] = score[i].second;
  return o;
}

// ---------------------------------------------------------------- large thresholds

std::vector<double> default_q_grid() {
  std::vector<double> q;
  for (int i = 0; i <= 64; ++i) q.push_back(std::pow(10.0, i / 8.0));
  return q;
}

RvIndex rv_index(const FragmentationModel& model, const std::vector<double>& q_grid) {
  const auto qs = top_range(q_grid, 1.0);
  std::vector<double> lx, ly;
  for (double q : qs) {
    lx.push_back(std::log(q));
    ly.push_back(std::log(tilted_phi(model, q)));
  }
  RvIndex r;
  r.rho = ls_slope(lx, ly);
  for (std::size_t i = 1; i < lx.size(); ++i) {
    r.residual = std::max(r.residual, std::abs((ly[i] - ly[i - 1]) / (lx[i] - lx[i - 1]) - r.rho));
  }
  r.not_rv = !(r.rho > 0.02 && r.rho < 0.98) || r.residual > 0.05;
  return r;
}

DynkinLamperti::DynkinLamperti(double rho) : rho_(rho) {
  if (!(rho > 0.0 && rho < 1.0)) invalid("Dynkin-Lamperti index must lie in (0, 1)");
}

double DynkinLamperti::density(double y) const {
  if (y <= 0.0) return 0.0;
  return std::sin(rho_ * std::numbers::pi) / std::numbers::pi / ((1.0 + y) * std::pow(y, rho_));
}

// y = t/(1-t) turns the mass on [0, y] into a regularized incomplete beta
double DynkinLamperti::cdf(double y) const {
  if (y <= 0.0) return 0.0;
  if (std::isinf(y)) return 1.0;
  return boost::math::ibeta(1.0 - rho_, rho_, y / (1.0 + y));
}

double DynkinLamperti::quantile(double p) const {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return kInf;
  const double t = boost::math::ibeta_inv(1.0 - rho_, rho_, p);
  return t / (1.0 - t);
}

double DynkinLamperti::total_mass() const {
  const double k = std::sin(rho_ * std::numbers::pi) / std::numbers::pi;
  const double r = rho_;
  // y = t^{1/(1-r)} on (0,1] and 1/y = t^{1/r} beyond leave bounded integrands
  const double near = quad::integrate([&](double t) { return 1.0 / ((1.0 - r) * (1.0 + std::pow(t, 1.0 / (1.0 - r)))); },
                                      0.0, 1.0, {1e-11});
  const double far = quad::integrate([&](double t) { return 1.0 / (r * (1.0 + std::pow(t, 1.0 / r))); }, 0.0, 1.0,
                                     {1e-11});
  return k * (near + far);
}

DynkinLamperti dynkin_lamperti_density(double rho) { return DynkinLamperti(rho); }

GammaConstants gamma_constants(double rho, double rho_hat, double gamma_exp) {
  if (!(gamma_exp > 1.0)) invalid("gamma_exp must exceed 1");
  if (!(rho > 0.0 && rho < 1.0 && rho_hat > 0.0 && rho_hat < 1.0)) invalid("indices must lie in (0, 1)");
  const double len = gamma_exp - 1.0;
  // ∫_0^len (len-u)^p u^{-r} du / (1+u) with the endpoint powers in the weight
  auto w = [&](double p, double r) {
    return std::sin(std::numbers::pi * r) / std::numbers::pi *
           quad::integrate_jacobi_weighted([](double u) { return 1.0 / (1.0 + u); }, len, p, r, 1e-14);
  };
  return {w(rho_hat, rho), w(rho_hat, rho_hat), w(rho, rho)};
}

std::string_view to_string(QLimit q) {
  switch (q) {
    case QLimit::Finite:
      return "finite";
    case QLimit::Zero:
      return "zero";
    case QLimit::Infinite:
      return "infinite";
  }
  return "?";
}

QBounds q_bounds(const FragmentationModel& m1, const FragmentationModel& m2, const std::vector<double>& q_grid) {
  const auto qs = top_range(q_grid, 2.0);
  std::vector<double> lx, ly, r;
  for (double q : qs) {
    const double v = phi(m2, q) / phi(m1, q);
    r.push_back(v);
    lx.push_back(std::log(q));
    ly.push_back(std::log(v));
  }
  QBounds b;
  b.slope = ls_slope(lx, ly);
  b.q_minus = *std::min_element(r.begin(), r.end());
  b.q_plus = *std::max_element(r.begin(), r.end());
  // Aitken on the first, middle and last point
  const double r0 = r.front(), r1 = r[r.size() / 2], r2 = r.back();
  const double den = r0 + r2 - 2.0 * r1;
  if (std::abs(den) > 1e-12 * std::abs(r2)) {
    const double lim = (r0 * r2 - r1 * r1) / den;
    if (std::isfinite(lim) && lim > 0.0) {
      b.q_minus = std::min(b.q_minus, lim);
      b.q_plus = std::max(b.q_plus, lim);
    }
  }
  // a power-law drift in the ratio means the limit is 0 or ∞
  if (b.slope < -0.02 || b.q_plus < 1e-6) {
    b.limit = QLimit::Zero;
    b.q_minus = b.q_plus = 0.0;
  } else if (b.slope > 0.02 || b.q_minus > 1e6) {
    b.limit = QLimit::Infinite;
    b.q_minus = b.q_plus = kInf;
  }
  return b;
}

std::string_view to_string(InfEff v) {
  switch (v) {
    case InfEff::FirstInfEff:
      return "first_inf_eff";
    case InfEff::SecondInfEff:
      return "second_inf_eff";
    case InfEff::Undetermined:
      return "undetermined";
  }
  return "?";
}

InfEffVerdict inf_efficiency(const FragmentationModel& m1, const FragmentationModel& m2) {
  InfEffVerdict v;
  v.rv1 = rv_index(m1);
  v.rv2 = rv_index(m2);
  if (v.rv1.not_rv || v.rv2.not_rv) {
    std::ostringstream os;
    os << "regular variation fails: rho estimates " << v.rv1.rho << " (residual " << v.rv1.residual << ") and "
       << v.rv2.rho << " (residual " << v.rv2.residual << ")";
    throw Error(ErrorCode::NotRV, kModule, os.str());
  }
  v.q = q_bounds(m1, m2);
  v.cost_ratio = m2.cost_constant() / m1.cost_constant();
  // agreement to 1e-6 counts as equality
  const double tol = 1e-6 * v.cost_ratio;
  if (v.q.q_plus < v.cost_ratio - tol) {
    v.verdict = InfEff::FirstInfEff;
  } else if (v.q.q_minus > v.cost_ratio + tol) {
    v.verdict = InfEff::SecondInfEff;
  }
  return v;
}

LargeThresholdConstants large_threshold_constants(const FragmentationModel& m1, const FragmentationModel& m2,
                                                  double gamma_exp) {
  LargeThresholdConstants k;
  k.rho = rv_index(m1).rho;
  k.rho_hat = rv_index(m2).rho;
  const auto q = q_bounds(m1, m2);
  k.Q_minus = q.q_minus;
  k.Q_plus = q.q_plus;
  k.gamma = gamma_constants(k.rho, k.rho_hat, gamma_exp);
  return k;
}

TheoremReport check_large_threshold_theorems(const Device& d1, const Device& d2, double gamma_exp,
                                             const std::vector<double>& eta_grid, double eps_fraction) {
  if (eta_grid.empty()) invalid("empty eta grid");
  if (!(eps_fraction > 0.0 && eps_fraction < 1.0)) invalid("eps_fraction must lie in (0, 1)");
  const auto v = inf_efficiency(d1.model(), d2.model());
  const auto k = large_threshold_constants(d1.model(), d2.model(), gamma_exp);
  const double A = k.gamma.A, Ah = k.gamma.A_hat, B = k.gamma.B;
  const double c = d1.model().cost_constant();
  const double ch = d2.model().cost_constant();
  // energy-level Q± = (C/Ĉ) Q±_{φ,φ̂}
  const double qm = v.q.q_minus / v.cost_ratio;
  const double qp = v.q.q_plus / v.cost_ratio;
  const double inv_qm = std::isinf(qm) ? 0.0 : 1.0 / qm;

  TheoremReport rep;
  std::vector<std::vector<TheoremRow>> per(eta_grid.size());
  parallel_for(eta_grid.size(), [&](std::size_t i) {
    const double eta = eta_grid[i];
    const auto cfg = TwoStepConfig::from_ratio(eta, gamma_exp);
    const double l = cfg.ell_eta();
    const double l0 = cfg.ell_eta0();
    const double e = d1.psi(l), e0 = d1.psi(l0), eh = d2.psi(l), eh0 = d2.psi(l0);
    const double e12 = mean_energy_two_step(d1, d2, cfg).value;
    const double proxy = c / tilted_phi(d1.model(), 1.0 / l);
    const double proxy_hat = ch / tilted_phi(d2.model(), 1.0 / l);
    auto& out = per[i];

    TheoremRow s{eta, "vs_second", "", e12, 0.0, 0.0, (e12 - eh0) / eh, eh / proxy_hat};
    if (v.verdict == InfEff::SecondInfEff) {
      if (v.q.limit == QLimit::Infinite) {
        s.case_tag = "a";
        s.rhs = eh0;
        s.margin = s.scaled;
      } else {
        s.case_tag = "b";
        const double eps = eps_fraction * (qm - 1.0);
        s.rhs = eh0 + (qm - 1.0 - eps) * eh;
        s.margin = s.lhs - s.rhs;
      }
      out.push_back(s);
    } else if (v.verdict == InfEff::FirstInfEff) {
      if (v.q.limit == QLimit::Zero) {
        s.case_tag = "d";
        const double target = A - Ah - 1.0;
        s.rhs = eh0 + (target + eps_fraction) * eh;
        s.margin = eps_fraction - std::abs(s.scaled - target);
        out.push_back(s);
        if (1.0 - A + Ah > 0.0) {
          TheoremRow s2 = s;
          // the gamma0 clause ends with E(E(η,η^γ)) < E(Ê(η^γ))
          s2.case_tag = "d_gamma0";
          s2.rhs = eh0;
          s2.margin = s2.rhs - s2.lhs;
          out.push_back(s2);
        }
      } else {
        s.case_tag = "c";
        const double eps = eps_fraction * (1.0 - qp);
        s.rhs = eh0 + (qp - 1.0 + eps) * eh;
        s.margin = s.rhs - s.lhs;
        out.push_back(s);
      }
    }

    TheoremRow f{eta, "vs_first", "", e12, 0.0, 0.0, (e12 - e0) / e, e / proxy};
    if (v.verdict == InfEff::SecondInfEff) {
      f.case_tag = "a";
      const double eps = eps_fraction * (1.0 - inv_qm);
      f.rhs = e0 + (inv_qm - 1.0 + eps) * B * e;
      f.margin = f.rhs - f.lhs;
      out.push_back(f);
    } else if (v.verdict == InfEff::FirstInfEff) {
      if (v.q.limit == QLimit::Zero) {
        f.case_tag = "c";
        f.rhs = e0;
        f.margin = f.scaled;
      } else {
        f.case_tag = "b";
        const double eps = eps_fraction * (1.0 / qp - 1.0);
        f.rhs = e0 + (1.0 / qp - 1.0 - eps) * B * e;
        f.margin = f.lhs - f.rhs;
      }
      out.push_back(f);
    }

    // Q = 1: the two-step energy is equivalent to the second-only one
    if (v.q.limit == QLimit::Finite && std::abs(qm - 1.0) < 1e-3 && std::abs(qp - 1.0) < 1e-3) {
      TheoremRow r{eta, "remark", "q_one", e12, eh0, 0.0, e12 / eh0, eh / proxy_hat};
      r.margin = 0.02 - std::abs(r.scaled - 1.0);
      out.push_back(r);
    }
  });
  for (auto& p : per) rep.rows.insert(rep.rows.end(), p.begin(), p.end());
  rep.holds_from_vs_first = holds_from(rep.rows, "vs_first", false);
  rep.holds_from_vs_second = holds_from(rep.rows, "vs_second", false);
  return rep;
}

TheoremReport check_large_threshold_theorems(const ModelSpec& m1, const ModelSpec& m2, double gamma_exp,
                                             const std::vector<double>& eta_grid, double eps_fraction,
                                             const RenewalOptions& opts) {
  if (eta_grid.empty()) invalid("empty eta grid");
  const double eta_min = *std::min_element(eta_grid.begin(), eta_grid.end());
  const double eta_max = *std::max_element(eta_grid.begin(), eta_grid.end());
  const double x_max = x_max_for(gamma_exp * ell(eta_min));
  // ten bins below the level closest to 1, at most 2e4 bins overall
  RenewalOptions o = opts;
  if (o.resolution == 0.0) o.resolution = std::max(std::min(x_max / 2000.0, ell(eta_max) / 10.0), x_max / 2e4);
  return check_large_threshold_theorems(Device(m1, x_max, o), Device(m2, x_max, o), gamma_exp, eta_grid,
                                        eps_fraction);
}

double tauberian_ratio(const Device& d, double x, double rho) {
  return d.renewal().cumulative(x) * tilted_phi(d.model(), 1.0 / x) * std::tgamma(1.0 + rho);
}

}  // namespace fragopt
