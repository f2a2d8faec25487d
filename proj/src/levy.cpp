#include "fragopt/levy.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fragopt/error.hpp"
#include "fragopt/quadrature.hpp"

namespace fragopt {
namespace {

constexpr const char* kModule = "levy";
constexpr double kLog2 = std::numbers::ln2;
// The density table spans [kYMin, u_max]; below and above it the tail is
// extrapolated as a power law and an exponential respectively.
constexpr double kYMin = 1e-14;
constexpr int kNodesPerUnitLog = 100;
constexpr int kNodesUpper = 2000;

double endpoint_power(const BinaryDensity& nu) {
  if (const auto* p = std::get_if<PowerLaw>(&nu.family)) return -1.0 - p->rho;
  return 0.0;
}

}  // namespace

// Tabulated tail Π̄ and its first moments for a binary density. Nodes below
// log 2 are log-spaced and the logs of the tabulated functions are
// interpolated against log y; above log 2 the nodes are uniform and the
// coordinate is y itself. Interpolation is cubic Hermite with exact
// derivatives, which come for free from the density.
struct LevyMeasure::Table {
  struct Curve {
    std::vector<double> f;       // log of the tabulated function at nodes
    std::vector<double> d0, d1;  // derivatives at the ends of each segment, segment coordinate
    std::size_t first = 0, last = 0;
  };

  BinaryDensity nu;
  double alpha = 0.0;
  double mean = 0.0;
  bool infinite = false;
  double total = 0.0;
  std::vector<double> y;
  std::size_t split = 0;  // index of the node at log 2
  Curve log_tail;
  // K(y) = ∫_0^y x Π(dx), on nodes up to log 2
  Curve log_k;
  // J(y) = ∫_y^∞ Π̄(u) du, on nodes from log 2 on
  Curve log_j;

  bool log_coords(std::size_t k) const { return k < split; }
  double coord(std::size_t k, double v) const { return log_coords(k) ? std::log(v) : v; }

  std::size_t segment(double v, std::size_t first, std::size_t last) const {
    if (v <= y[first]) return first;
    if (v >= y[last]) return last - 1;
    const auto k = static_cast<std::size_t>(std::upper_bound(y.begin(), y.end(), v) - y.begin()) - 1;
    return std::clamp(k, first, last - 1);
  }

  static double hermite(double f0, double f1, double d0, double d1, double h, double t) {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * d1;
  }
  static double hermite_slope(double f0, double f1, double d0, double d1, double h, double t) {
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * f0 + (-6 * t2 + 6 * t) * f1) / h + (3 * t2 - 4 * t + 1) * d0 + (3 * t2 - 2 * t) * d1;
  }

  double eval(const Curve& cv, double v) const {
    const std::size_t k = segment(v, cv.first, cv.last);
    const double c0 = coord(k, y[k]);
    const double c1 = coord(k, y[k + 1]);
    const double c = coord(k, v);
    // straight-line extrapolation outside the table
    if (c < c0) return cv.f[k] + cv.d0[k] * (c - c0);
    if (c > c1) return cv.f[k + 1] + cv.d1[k] * (c - c1);
    return hermite(cv.f[k], cv.f[k + 1], cv.d0[k], cv.d1[k], c1 - c0, (c - c0) / (c1 - c0));
  }

  double tail(double u) const { return std::exp(eval(log_tail, u)); }
  double k_moment(double v) const { return std::exp(eval(log_k, v)); }
  double j_moment(double v) const { return std::exp(eval(log_j, v)); }

  double integrated_tail(double w) const {
    if (w <= 0.0) return 0.0;
    if (w <= kLog2) return w * tail(w) + k_moment(w);
    return mean - j_moment(w);
  }

  double small_jump_mean(double eps) const {
    if (eps <= 0.0) return 0.0;
    if (eps <= kLog2) return k_moment(eps);
    return mean - j_moment(eps) - eps * tail(eps);
  }

  // Inverse of tail().
  double inverse_tail(double target) const {
    const double lt = std::log(target);
    const auto& f = log_tail.f;
    const std::size_t n = y.size();
    auto from_coord = [&](std::size_t k, double c) { return log_coords(k) ? std::exp(c) : c; };
    if (lt >= f.front()) return from_coord(0, coord(0, y[0]) + (lt - f[0]) / log_tail.d0[0]);
    if (lt <= f.back()) return from_coord(n - 2, y[n - 1] + (lt - f[n - 1]) / log_tail.d1[n - 2]);
    // f is decreasing
    auto it = std::lower_bound(f.begin(), f.end(), lt, std::greater<>());
    std::size_t k = static_cast<std::size_t>(it - f.begin());
    k = std::min(std::max<std::size_t>(k, 1) - 1, n - 2);
    const double c0 = coord(k, y[k]);
    const double h = coord(k, y[k + 1]) - c0;
    const double f0 = f[k], f1 = f[k + 1], d0 = log_tail.d0[k], d1 = log_tail.d1[k];
    // safeguarded Newton on t in [0, 1]
    double lo = 0.0, hi = 1.0;
    double t = (f1 == f0) ? 0.5 : std::clamp((lt - f0) / (f1 - f0), 0.0, 1.0);
    for (int it2 = 0; it2 < 60; ++it2) {
      const double r = hermite(f0, f1, d0, d1, h, t) - lt;
      if (r > 0.0) {
        lo = t;
      } else {
        hi = t;
      }
      const double slope = hermite_slope(f0, f1, d0, d1, h, t) * h;
      double next = slope < 0.0 ? t - r / slope : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) < 1e-15) {
        t = next;
        break;
      }
      t = next;
    }
    return from_coord(k, c0 + t * h);
  }

  // one-sided densities of the two children
  double big(double v) const { return std::exp(-(alpha + 1.0) * v) * nu(-std::expm1(-v)); }
  double small(double v) const {
    if (v > 345.0) return 0.0;
    return std::exp(-(alpha + 1.0) * v) * nu(std::exp(-v));
  }
  double density(double v) const {
    double d = 0.0;
    if (v <= kLog2) d += big(v);
    if (v >= kLog2) d += small(v);
    return d;
  }
};

LevyMeasure LevyMeasure::discrete(std::vector<Jump> jumps) {
  std::erase_if(jumps, [](const Jump& j) { return !(j.mass > 0.0); });
  for (const auto& j : jumps) {
    if (!(j.x > 0.0) || !std::isfinite(j.x) || !std::isfinite(j.mass)) {
      throw Error(ErrorCode::InvalidModel, kModule, "jump sizes must be positive and finite");
    }
  }
  if (jumps.empty()) throw Error(ErrorCode::InvalidModel, kModule, "Levy measure has no jumps");
  std::sort(jumps.begin(), jumps.end(), [](const Jump& a, const Jump& b) { return a.x < b.x; });
  LevyMeasure m;
  for (const auto& j : jumps) {
    if (!m.jumps_.empty() && std::abs(j.x - m.jumps_.back().x) <= 1e-12 * std::max(1.0, j.x)) {
      m.jumps_.back().mass += j.mass;
    } else {
      m.jumps_.push_back(j);
    }
  }
  double run = 0.0;
  std::vector<double> xs;
  for (const auto& j : m.jumps_) {
    run += j.mass;
    m.cumulative_.push_back(run);
    m.mean_ += j.mass * j.x;
    xs.push_back(j.x);
  }
  m.lattice_span_ = fragopt::lattice_span(xs);
  return m;
}

LevyMeasure LevyMeasure::from_binary(const BinaryDensity& nu, double alpha, double mean_jump) {
  auto t = std::make_shared<Table>();
  t->nu = nu;
  t->alpha = alpha;
  t->mean = mean_jump;
  t->infinite = nu.infinite_activity();
  const double e0 = endpoint_power(nu);
  quad::Options opts;
  opts.rel_tol = 1e-11;

  // decay rate of Π̄ at infinity, used to place the last node
  double decay = alpha + 1.0 + e0;
  if (!(decay > 0.0)) throw Error(ErrorCode::DivergentIntegral, kModule, "tilted measure has no finite mean");
  const double u_max = std::min(700.0, kLog2 + 40.0 / decay);

  const int n_lower = static_cast<int>(std::ceil(std::log(kLog2 / kYMin) * kNodesPerUnitLog));
  for (int i = 0; i <= n_lower; ++i) {
    t->y.push_back(kYMin * std::exp(std::log(kLog2 / kYMin) * i / n_lower));
  }
  t->y.back() = kLog2;
  t->split = t->y.size() - 1;
  for (int i = 1; i <= kNodesUpper; ++i) t->y.push_back(kLog2 + (u_max - kLog2) * i / kNodesUpper);
  const std::size_t n = t->y.size();
  std::vector<double> tail(n), moment(n);

  // Small children x^alpha with x in (0, 1/2] always jump at least log 2.
  // x below 1e-150 is cut off: the density could overflow and the mass there
  // is negligible
  auto small_child = [&](double x) { return x <= 1e-150 ? 0.0 : std::pow(x, alpha) * nu(x); };
  auto big_child = [&](double x) { return x <= 1e-150 ? 0.0 : std::pow(1.0 - x, alpha) * nu(x); };
  auto big_child_moment = [&](double x) {
    return x <= 1e-150 ? 0.0 : std::pow(1.0 - x, alpha) * (-std::log1p(-x)) * nu(x);
  };

  // Upper region, from the far end back to log 2.
  {
    const double x_far = std::exp(-u_max);
    double acc = quad::integrate_algebraic_left(small_child, 0.0, x_far, alpha + e0, opts);
    tail[n - 1] = acc;
    for (std::size_t k = n - 1; k > t->split; --k) {
      acc += quad::integrate(small_child, std::exp(-t->y[k]), std::exp(-t->y[k - 1]), opts);
      tail[k - 1] = acc;
    }
  }
  const double small_total = tail[t->split];
  // Lower region: Π̄(y) = small_total + ∫_{x(y)}^{1/2} big_child, x(y) = 1 - e^{-y}.
  {
    double acc = 0.0;
    for (std::size_t k = t->split; k-- > 0;) {
      acc += quad::integrate(big_child, -std::expm1(-t->y[k]), -std::expm1(-t->y[k + 1]), opts);
      tail[k] = small_total + acc;
    }
    // K(y) = ∫_0^{x(y)} (1-x)^alpha log(1/(1-x)) f(x) dx, accumulated upwards
    double k_acc = quad::integrate_algebraic_left(big_child_moment, 0.0, -std::expm1(-t->y[0]), 1.0 + e0, opts);
    moment[0] = k_acc;
    for (std::size_t k = 1; k <= t->split; ++k) {
      k_acc += quad::integrate(big_child_moment, -std::expm1(-t->y[k - 1]), -std::expm1(-t->y[k]), opts);
      moment[k] = k_acc;
    }
  }
  const std::size_t sp = t->split;
  // J(y) = ∫_y^∞ Π̄ on the upper region, by Gauss-Legendre on each segment
  // against the Hermite interpolant of log Π̄ built first.
  auto& lt = t->log_tail;
  lt.first = 0;
  lt.last = n - 1;
  for (std::size_t k = 0; k < n; ++k) lt.f.push_back(std::log(tail[k]));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const bool lower = k < sp;
    const double da = lower ? t->big(t->y[k]) : t->small(t->y[k]);
    const double db = lower ? t->big(t->y[k + 1]) : t->small(t->y[k + 1]);
    // d log Π̄ / dy = -π / Π̄, times y in log coordinates
    const double ga = -da / tail[k] * (lower ? t->y[k] : 1.0);
    const double gb = -db / tail[k + 1] * (lower ? t->y[k + 1] : 1.0);
    lt.d0.push_back(ga);
    lt.d1.push_back(gb);
  }
  auto& lk = t->log_k;
  lk.first = 0;
  lk.last = sp;
  lk.f.assign(n, 0.0);
  lk.d0.assign(n, 0.0);
  lk.d1.assign(n, 0.0);
  for (std::size_t k = 0; k <= sp; ++k) lk.f[k] = std::log(moment[k]);
  for (std::size_t k = 0; k < sp; ++k) {
    // d log K / d log y = y^2 π(y) / K
    const double ya = t->y[k], yb = t->y[k + 1];
    lk.d0[k] = ya * ya * t->big(ya) / moment[k];
    lk.d1[k] = yb * yb * t->big(yb) / moment[k + 1];
  }
  std::vector<double> upper_j(n, 0.0);
  {
    const auto gl = quad::gauss_legendre(8);
    const double slope_far = lt.d1[n - 2];
    double acc = slope_far < 0.0 ? tail[n - 1] / (-slope_far) : 0.0;
    upper_j[n - 1] = acc;
    for (std::size_t k = n - 1; k > sp; --k) {
      const double a = t->y[k - 1], b = t->y[k];
      double seg = 0.0;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double v = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
        seg += gl.weights[i] * t->tail(v);
      }
      acc += 0.5 * (b - a) * seg;
      upper_j[k - 1] = acc;
    }
  }
  auto& lj = t->log_j;
  lj.first = sp;
  lj.last = n - 1;
  lj.f.assign(n, 0.0);
  lj.d0.assign(n, 0.0);
  lj.d1.assign(n, 0.0);
  for (std::size_t k = sp; k < n; ++k) lj.f[k] = std::log(upper_j[k]);
  for (std::size_t k = sp; k + 1 < n; ++k) {
    lj.d0[k] = -tail[k] / upper_j[k];
    lj.d1[k] = -tail[k + 1] / upper_j[k + 1];
  }
  if (!t->infinite) {
    t->total = small_total +
               quad::integrate_algebraic_left(big_child, 0.0, 0.5, std::min(0.0, e0 + 1.0), opts);
  } else {
    t->total = std::numeric_limits<double>::infinity();
  }

  LevyMeasure m;
  m.mean_ = mean_jump;
  m.table_ = std::move(t);
  return m;
}

bool LevyMeasure::finite_activity() const { return !table_ || !table_->infinite; }

double LevyMeasure::total_mass() const {
  if (table_) return table_->total;
  return cumulative_.back();
}

double LevyMeasure::tail(double u) const {
  if (table_) {
    if (u <= 0.0) return table_->total;
    return std::min(table_->tail(u), table_->total);
  }
  const auto it = std::upper_bound(jumps_.begin(), jumps_.end(), u, [](double v, const Jump& j) { return v < j.x; });
  const std::size_t idx = static_cast<std::size_t>(it - jumps_.begin());
  return cumulative_.back() - (idx == 0 ? 0.0 : cumulative_[idx - 1]);
}

double LevyMeasure::integrated_tail(double w) const {
  if (w <= 0.0) return 0.0;
  if (table_) return table_->integrated_tail(w);
  double s = 0.0;
  for (const auto& j : jumps_) s += j.mass * std::min(j.x, w);
  return s;
}

double LevyMeasure::mean() const { return mean_; }

double LevyMeasure::laplace(double q) const {
  if (q <= 0.0) return 0.0;
  if (!table_) {
    double s = 0.0;
    for (const auto& j : jumps_) s += j.mass * (-std::expm1(-q * j.x));
    return s;
  }
  const Table& t = *table_;
  auto f = [&](double y) { return y <= 1e-150 ? 0.0 : -std::expm1(-q * y) * t.density(y); };
  quad::Options opts;
  opts.rel_tol = 1e-11;
  std::vector<double> pts{kLog2};
  const double y_min = std::min(1e-3, 1e-3 / q);
  while (pts.back() > y_min) pts.push_back(pts.back() / 4.0);
  std::reverse(pts.begin(), pts.end());
  const double e0 = endpoint_power(t.nu) + 1.0;
  double s = quad::integrate_algebraic_left(f, 0.0, pts.front(), e0, opts);
  s += quad::integrate_pieces(f, pts, opts);
  s += quad::integrate(f, kLog2, std::numeric_limits<double>::infinity(), opts);
  return s;
}

double LevyMeasure::density(double y) const {
  if (!table_) throw Error(ErrorCode::InvalidModel, kModule, "a discrete Levy measure has no density");
  return table_->density(y);
}

double LevyMeasure::small_jump_mean(double eps) const {
  if (table_) return table_->small_jump_mean(eps);
  double s = 0.0;
  for (const auto& j : jumps_) {
    if (j.x <= eps) s += j.mass * j.x;
  }
  return s;
}

double LevyMeasure::min_jump() const { return table_ ? 0.0 : jumps_.front().x; }

double LevyMeasure::jump_rate(double eps) const {
  if (!table_) return cumulative_.back();
  if (eps <= 0.0) {
    if (table_->infinite) {
      throw Error(ErrorCode::TruncationRequired, kModule, "infinite activity needs a positive truncation level");
    }
    return table_->total;
  }
  return tail(eps);
}

double LevyMeasure::sample_jump(Stream& rng, double eps) const {
  if (!table_) {
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return jumps_[static_cast<std::size_t>(it - cumulative_.begin())].x;
  }
  const double top = jump_rate(eps);
  const double target = rng.uniform() * top;
  const double y = table_->inverse_tail(target);
  return std::max(y, std::max(eps, kYMin));
}

std::optional<double> lattice_span(std::span<const double> xs) {
  if (xs.empty()) return std::nullopt;
  const double x0 = *std::min_element(xs.begin(), xs.end());
  // Represent every ratio x_i / x0 as p_i / q_i.
  std::vector<std::pair<long long, long long>> fracs;
  for (double x : xs) {
    const double r = x / x0;
    bool found = false;
    // continued fraction convergents
    long long h0 = 1, h1 = 0, k0 = 0, k1 = 1;
    double v = r;
    for (int it = 0; it < 40; ++it) {
      const double a = std::floor(v);
      const long long ai = static_cast<long long>(a);
      const long long h2 = ai * h0 + h1;
      const long long k2 = ai * k0 + k1;
      if (k2 > 1000) break;
      if (std::abs(r - static_cast<double>(h2) / static_cast<double>(k2)) <= 1e-9 * r) {
        fracs.emplace_back(h2, k2);
        found = true;
        break;
      }
      h1 = h0;
      k1 = k0;
      h0 = h2;
      k0 = k2;
      const double frac = v - a;
      if (frac < 1e-15) break;
      v = 1.0 / frac;
    }
    if (!found) return std::nullopt;
  }
  long long l = 1;
  for (const auto& f : fracs) {
    l = std::lcm(l, f.second);
    if (l > 1000000) return std::nullopt;
  }
  long long g = 0;
  for (const auto& f : fracs) g = std::gcd(g, f.first * (l / f.second));
  return x0 * static_cast<double>(g) / static_cast<double>(l);
}

double SubordinatorSpec::tilted_phi(double q) const { return fragopt::tilted_phi(*model, q); }

LevyMeasure tilted_levy_measure(const FragmentationModel& model) {
  if (const auto* d = model.finite()) {
    std::vector<Jump> jumps;
    for (const auto& a : d->atoms) {
      for (double s : a.partition.masses()) jumps.push_back({-std::log(s), a.weight * std::pow(s, model.alpha())});
    }
    return LevyMeasure::discrete(std::move(jumps));
  }
  return LevyMeasure::from_binary(*model.binary(), model.alpha(), model.mean_jump());
}

SubordinatorSpec make_subordinator(const FragmentationModel& model) {
  return SubordinatorSpec{std::make_shared<const FragmentationModel>(model), tilted_levy_measure(model)};
}

double phi(const FragmentationModel& model, double q) { return model.kappa(q + 1.0); }
double tilted_phi(const FragmentationModel& model, double q) {
  // exactly zero at the origin, whatever the root-finding residual
  if (q == 0.0) return 0.0;
  return model.kappa(q + model.alpha());
}

double default_trunc_eps(const LevyMeasure& levy, double level) {
  if (levy.finite_activity()) return 0.0;
  if (!(level > 0.0)) throw Error(ErrorCode::InvalidModel, kModule, "truncation needs a positive level");
  // eps K(eps) bounds the variance rate of the replaced jumps
  const double target = 1e-6 * level * level * levy.laplace(1.0 / level) / std::numbers::e;
  auto spread = [&](double e) { return e * levy.small_jump_mean(e); };
  double lo = std::log(kYMin);
  double hi = std::log(std::min(kLog2, level));
  if (spread(std::exp(lo)) > target) return kYMin;
  if (spread(std::exp(hi)) <= target) return std::exp(hi);
  for (int it = 0; it < 100 && hi - lo > 1e-6; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (spread(std::exp(mid)) <= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(lo);
}

PassageSample sample_passage(const LevyMeasure& levy, double level, double weight_exponent, Stream& rng,
                             double trunc_eps) {
  if (!levy.finite_activity() && !(trunc_eps > 0.0)) {
    throw Error(ErrorCode::TruncationRequired, kModule, "infinite activity needs a positive truncation level");
  }
  const double rate = levy.jump_rate(trunc_eps);
  const double drift = levy.finite_activity() ? 0.0 : levy.small_jump_mean(trunc_eps);
  const double w = weight_exponent;
  // ∫_0^s e^{w (x + drift t)} dt
  auto occupation = [&](double x, double s) {
    const double k = w * drift;
    const double base = w == 0.0 ? 1.0 : std::exp(w * x);
    if (std::abs(k * s) < 1e-8) return base * s * (1.0 + 0.5 * k * s);
    return base * std::expm1(k * s) / k;
  };
  PassageSample out;
  out.level = level;
  double xi = 0.0;
  while (at_or_below(xi, level)) {
    const double tau = rng.exponential(rate);
    if (drift > 0.0 && xi + drift * tau > level) {
      // creeps across the level before the next jump
      out.weighted_occupation += occupation(xi, (level - xi) / drift);
      xi = level;
      break;
    }
    out.weighted_occupation += occupation(xi, tau);
    xi += drift * tau + levy.sample_jump(rng, trunc_eps);
    if (++out.n_jumps > 1'000'000'000ULL) {
      throw Error(ErrorCode::ExplosionGuard, kModule, "passage needs more than 1e9 jumps");
    }
  }
  out.xi_at_passage = xi;
  return out;
}

}  // namespace fragopt
