#include "fragopt/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "fragopt/csv.hpp"
#include "fragopt/error.hpp"
#include "fragopt/parallel.hpp"

namespace fragopt {
namespace {

constexpr const char* kModule = "renewal";
constexpr std::size_t kBatches = 32;

// ∫_a^b e^{θy} dy
double exp_integral(double a, double b, double theta) {
  if (theta == 0.0) return b - a;
  return std::exp(theta * a) * std::expm1(theta * (b - a)) / theta;
}

// number of entries of sorted `pos` that are <= x under the tie rule
std::size_t count_at_or_below(std::span<const double> pos, double x) {
  const double cut = x + kTieTol * std::max(1.0, std::abs(x));
  return static_cast<std::size_t>(std::upper_bound(pos.begin(), pos.end(), cut) - pos.begin());
}

void check_range(double x, double x_max) {
  if (x > x_max * (1.0 + 1e-12) + 1e-12) {
    std::ostringstream os;
    os << "renewal measure needed at " << x << " but only computed up to " << x_max;
    throw Error(ErrorCode::InconsistentSupport, kModule, os.str());
  }
}

void merge_sorted(std::vector<std::pair<double, double>>& pts, std::vector<double>& pos, std::vector<double>& mass) {
  std::sort(pts.begin(), pts.end());
  for (const auto& [x, m] : pts) {
    if (!pos.empty() && std::abs(x - pos.back()) <= 1e-12 * std::max(1.0, x)) {
      mass.back() += m;
    } else {
      pos.push_back(x);
      mass.push_back(m);
    }
  }
}

}  // namespace

std::string_view to_string(RenewalBackend b) {
  switch (b) {
    case RenewalBackend::Lattice:
      return "lattice";
    case RenewalBackend::Atomic:
      return "atomic";
    case RenewalBackend::GridDensity:
      return "grid_density";
  }
  return "unknown";
}

RenewalMeasure renewal_measure(const LevyMeasure& levy, double x_max, const RenewalOptions& opts) {
  if (!(x_max > 0.0) || !std::isfinite(x_max)) {
    throw Error(ErrorCode::InvalidModel, kModule, "x_max must be positive and finite");
  }
  RenewalMeasure u;
  u.x_max_ = x_max;

  if (levy.is_discrete() && !opts.force_grid) {
    const auto jumps = levy.jumps();
    const double lambda = levy.total_mass();
    if (const auto span = levy.lattice_span()) {
      // u_n = δ_{n0}/λ + Σ_j f_j u_{n - k_j}
      const double h = *span;
      const auto n_max = static_cast<std::size_t>(std::floor(x_max / h + 1e-9));
      if (n_max + 1 > opts.max_support) {
        throw Error(ErrorCode::SupportTooLarge, kModule, "lattice renewal support exceeds the configured cap");
      }
      std::vector<std::size_t> k;
      std::vector<double> f;
      for (const auto& j : jumps) {
        k.push_back(static_cast<std::size_t>(std::llround(j.x / h)));
        f.push_back(j.mass / lambda);
      }
      std::vector<double> un(n_max + 1, 0.0);
      un[0] = 1.0 / lambda;
      for (std::size_t n = 1; n <= n_max; ++n) {
        double s = 0.0;
        for (std::size_t j = 0; j < k.size(); ++j) {
          if (k[j] <= n) s += f[j] * un[n - k[j]];
        }
        un[n] = s;
      }
      u.backend_ = RenewalBackend::Lattice;
      for (std::size_t n = 0; n <= n_max; ++n) {
        if (un[n] > 0.0) {
          u.positions_.push_back(static_cast<double>(n) * h);
          u.masses_.push_back(un[n]);
        }
      }
    } else {
      // Every point Σ_j n_j x_j <= x_max carries (1/λ) multinomial(n) Π f_j^{n_j}.
      u.backend_ = RenewalBackend::Atomic;
      std::vector<double> log_f;
      for (const auto& j : jumps) log_f.push_back(std::log(j.mass / lambda));
      std::vector<std::pair<double, double>> pts;
      std::vector<int> counts(jumps.size(), 0);
      const double cut = x_max * (1.0 + 1e-12);
      // depth-first over count vectors
      auto rec = [&](auto&& self, std::size_t j, double pos, int total, double log_w) -> void {
        if (j == jumps.size()) {
          const double m = std::exp(std::lgamma(total + 1.0) + log_w) / lambda;
          pts.emplace_back(pos, m);
          if (pts.size() > opts.max_support) {
            throw Error(ErrorCode::SupportTooLarge, kModule, "renewal support exceeds the configured cap");
          }
          return;
        }
        for (int n = 0;; ++n) {
          const double p = pos + n * jumps[j].x;
          if (p > cut) break;
          counts[j] = n;
          self(self, j + 1, p, total + n, log_w + n * log_f[j] - std::lgamma(n + 1.0));
        }
      };
      rec(rec, 0, 0.0, 0, 0.0);
      merge_sorted(pts, u.positions_, u.masses_);
    }
    double run = 0.0;
    for (double m : u.masses_) {
      run += m;
      u.prefix_.push_back(run);
    }
    return u;
  }

  // Monte Carlo occupation estimator. Each visit to a state contributes the
  // expected holding time 1/rate, spread along the drift when there is one.
  u.backend_ = RenewalBackend::GridDensity;
  const double h = opts.resolution > 0.0 ? opts.resolution : x_max / 2000.0;
  if (levy.is_discrete() && h > levy.min_jump() / 4.0) {
    std::ostringstream os;
    os << "bin width " << h << " exceeds a quarter of the smallest jump " << levy.min_jump();
    throw Error(ErrorCode::ResolutionTooCoarse, kModule, os.str());
  }
  const double eps = levy.finite_activity() ? 0.0
                     : opts.trunc_eps > 0.0 ? opts.trunc_eps
                                            : default_trunc_eps(levy, x_max);
  const double rate = levy.jump_rate(eps);
  const auto n_bins = static_cast<std::size_t>(std::ceil(x_max / h - 1e-9));
  const std::size_t paths = std::max<std::size_t>(opts.mc_paths, kBatches);
  const bool finite = levy.finite_activity();
  // dropped jumps come back as a drift (see sample_passage)
  const double drift = finite ? 0.0 : levy.small_jump_mean(eps);
  // mean distance drifted per holding time
  const double run = drift / rate;

  std::vector<std::vector<double>> counts(kBatches, std::vector<double>(n_bins, 0.0));
  parallel_for(kBatches, [&](std::size_t b) {
    auto& c = counts[b];
    for (std::size_t i = b; i < paths; i += kBatches) {
      Stream rng(opts.seed, i);
      double xi = 0.0;
      bool first = true;
      std::size_t guard = 0;
      while (at_or_below(xi, x_max)) {
        auto bin = std::min(static_cast<std::size_t>(std::floor(xi / h + 1e-9)), n_bins - 1);
        if (run > 0.0) {
          // expected share of the holding time spent in each bin while
          // drifting: the drifted distance is exponential with mean `run`
          double done = 0.0;
          for (std::size_t k = bin; k < n_bins && done < 1.0 - 1e-12; ++k) {
            const double upto = -std::expm1(-(static_cast<double>(k + 1) * h - xi) / run);
            c[k] += upto - done;
            done = upto;
          }
        } else if (!(first && finite)) {
          c[bin] += 1.0;
        }
        first = false;
        if (run > 0.0) xi += drift * rng.exponential(rate);
        xi += levy.sample_jump(rng, eps);
        if (++guard > 1'000'000'000ULL) throw Error(ErrorCode::ExplosionGuard, kModule, "path needs more than 1e9 jumps");
      }
    }
  });

  u.step_ = h;
  u.sample_count_ = paths;
  u.trunc_eps_ = eps;
  u.atom_at_zero_ = finite ? 1.0 / rate : 0.0;
  u.density_.assign(n_bins, 0.0);
  const double scale = 1.0 / (static_cast<double>(paths) * rate);
  for (std::size_t b = 0; b < kBatches; ++b) {
    for (std::size_t k = 0; k < n_bins; ++k) u.density_[k] += counts[b][k];
  }
  for (auto& d : u.density_) d *= scale / h;
  u.bin_prefix_.assign(n_bins + 1, 0.0);
  for (std::size_t k = 0; k < n_bins; ++k) u.bin_prefix_[k + 1] = u.bin_prefix_[k] + u.density_[k] * h;
  // per-batch cumulative masses for error bars
  const double batch_paths = static_cast<double>(paths) / kBatches;
  u.batch_prefix_.assign(kBatches, std::vector<double>(n_bins + 1, 0.0));
  for (std::size_t b = 0; b < kBatches; ++b) {
    for (std::size_t k = 0; k < n_bins; ++k) {
      u.batch_prefix_[b][k + 1] = u.batch_prefix_[b][k] + counts[b][k] / (batch_paths * rate);
    }
  }
  return u;
}

double RenewalMeasure::mass_at_zero() const {
  if (backend_ == RenewalBackend::GridDensity) return atom_at_zero_;
  return (!positions_.empty() && positions_.front() == 0.0) ? masses_.front() : 0.0;
}

double RenewalMeasure::cumulative(double x) const {
  if (x < 0.0 && !at_or_below(0.0, x)) return 0.0;
  check_range(x, x_max_);
  if (backend_ != RenewalBackend::GridDensity) {
    const std::size_t n = count_at_or_below(positions_, x);
    return n == 0 ? 0.0 : prefix_[n - 1];
  }
  x = std::clamp(x, 0.0, step_ * static_cast<double>(density_.size()));
  const auto k = std::min(static_cast<std::size_t>(x / step_), density_.size());
  double c = atom_at_zero_ + bin_prefix_[k];
  if (k < density_.size()) c += density_[k] * (x - static_cast<double>(k) * step_);
  return c;
}

double RenewalMeasure::cumulative_error(double x) const {
  if (backend_ != RenewalBackend::GridDensity) return 0.0;
  check_range(x, x_max_);
  x = std::clamp(x, 0.0, step_ * static_cast<double>(density_.size()));
  const auto k = std::min(static_cast<std::size_t>(x / step_), density_.size());
  const double frac = k < density_.size() ? (x - static_cast<double>(k) * step_) / step_ : 0.0;
  std::vector<double> v;
  double mean = 0.0;
  for (const auto& row : batch_prefix_) {
    double c = row[k];
    if (k < density_.size()) c += frac * (row[k + 1] - row[k]);
    v.push_back(c);
    mean += c;
  }
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double c : v) ss += (c - mean) * (c - mean);
  const double nb = static_cast<double>(v.size());
  return std::sqrt(ss / (nb - 1.0) / nb);
}

double RenewalMeasure::weighted(double x, double theta) const {
  if (x < 0.0 && !at_or_below(0.0, x)) return 0.0;
  check_range(x, x_max_);
  if (backend_ != RenewalBackend::GridDensity) {
    const std::size_t n = count_at_or_below(positions_, x);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(theta * positions_[i]) * masses_[i];
    return s;
  }
  x = std::clamp(x, 0.0, step_ * static_cast<double>(density_.size()));
  double s = atom_at_zero_;
  for (std::size_t k = 0; k < density_.size(); ++k) {
    const double lo = static_cast<double>(k) * step_;
    if (lo >= x) break;
    s += density_[k] * exp_integral(lo, std::min(lo + step_, x), theta);
  }
  return s;
}

void RenewalMeasure::write_csv(std::ostream& os) const {
  os << "x,mass_or_density,cumulative\n";
  if (backend_ != RenewalBackend::GridDensity) {
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      os << csv::num(positions_[i]) << ',' << csv::num(masses_[i]) << ',' << csv::num(prefix_[i]) << '\n';
    }
    return;
  }
  os << csv::num(0.0) << ',' << csv::num(atom_at_zero_) << ',' << csv::num(atom_at_zero_) << '\n';
  for (std::size_t k = 0; k < density_.size(); ++k) {
    os << csv::num((static_cast<double>(k) + 0.5) * step_) << ',' << csv::num(density_[k]) << ','
       << csv::num(atom_at_zero_ + bin_prefix_[k + 1]) << '\n';
  }
}

EnergyPotential::EnergyPotential(const FragmentationModel& model, const RenewalMeasure& u)
    : u_(&u), cost_(model.cost_constant()), theta_(model.alpha() - model.beta()) {
  if (u.backend() != RenewalBackend::GridDensity) {
    double run = 0.0;
    for (std::size_t i = 0; i < u.positions().size(); ++i) {
      run += std::exp(theta_ * u.positions()[i]) * u.masses()[i];
      prefix_.push_back(run);
    }
  } else {
    const auto d = u.density();
    const double h = u.step();
    prefix_.assign(d.size() + 1, 0.0);
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double lo = static_cast<double>(k) * h;
      prefix_[k + 1] = prefix_[k] + d[k] * exp_integral(lo, lo + h, theta_);
    }
  }
}

double EnergyPotential::operator()(double x) const {
  if (x < 0.0) {
    if (!at_or_below(0.0, x)) return 0.0;
    x = 0.0;
  }
  check_range(x, u_->x_max());
  if (u_->backend() != RenewalBackend::GridDensity) {
    const std::size_t n = count_at_or_below(u_->positions(), x);
    return n == 0 ? 0.0 : cost_ * prefix_[n - 1];
  }
  const auto d = u_->density();
  const double h = u_->step();
  x = std::min(x, h * static_cast<double>(d.size()));
  const auto k = std::min(static_cast<std::size_t>(x / h), d.size());
  double s = u_->atom_at_zero() + prefix_[k];
  if (k < d.size()) {
    const double lo = static_cast<double>(k) * h;
    s += d[k] * exp_integral(lo, x, theta_);
  }
  return cost_ * s;
}

OvershootLaw overshoot_law(const LevyMeasure& levy, const RenewalMeasure& u, double level) {
  if (!(level >= 0.0)) throw Error(ErrorCode::InvalidModel, kModule, "overshoot level must be >= 0");
  check_range(level, u.x_max());
  OvershootLaw law;
  law.level_ = level;
  law.levy_ = &levy;
  law.u_ = &u;
  if (levy.is_discrete() && u.backend() != RenewalBackend::GridDensity) {
    std::vector<std::pair<double, double>> pts;
    const auto pos = u.positions();
    const auto mass = u.masses();
    const std::size_t n = count_at_or_below(pos, level);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& j : levy.jumps()) {
        const double z = pos[i] + j.x;
        if (passed(z, level)) pts.emplace_back(z, mass[i] * j.mass);
      }
    }
    std::vector<double> zs, ms;
    merge_sorted(pts, zs, ms);
    double run = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      law.atoms_.push_back({zs[i], ms[i]});
      run += ms[i];
      law.atom_cdf_.push_back(run);
    }
    law.atomic_ = true;
    return law;
  }
  law.atomic_ = false;
  return law;
}

double OvershootLaw::survival_from_bins(double z) const {
  // atom0 Π̄(z) + Σ_b d_b [I(z - lo_b) - I(z - hi_b)] over bins clipped to [0, level]
  double s = u_->atom_at_zero() * levy_->tail(z);
  const auto d = u_->density();
  const double h = u_->step();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double lo = static_cast<double>(k) * h;
    if (lo > level_) break;
    const double hi = std::min(lo + h, level_);
    if (d[k] == 0.0 || hi <= lo) continue;
    s += d[k] * (levy_->integrated_tail(z - lo) - levy_->integrated_tail(z - hi));
  }
  return s;
}

double OvershootLaw::total_mass() const {
  if (atomic_) return atom_cdf_.empty() ? 0.0 : atom_cdf_.back();
  return survival_from_bins(level_);
}

double OvershootLaw::survival(double z) const {
  if (atomic_) {
    const double total = atom_cdf_.empty() ? 0.0 : atom_cdf_.back();
    const double cut = z + kTieTol * std::max(1.0, std::abs(z));
    auto it = std::upper_bound(atoms_.begin(), atoms_.end(), cut, [](double v, const Jump& a) { return v < a.x; });
    const auto idx = static_cast<std::size_t>(it - atoms_.begin());
    return total - (idx == 0 ? 0.0 : atom_cdf_[idx - 1]);
  }
  if (z <= level_) return total_mass();
  return survival_from_bins(z);
}

double OvershootLaw::expectation(const std::function<double(double)>& g, double z_hi) const {
  if (atomic_) {
    double s = 0.0;
    for (const auto& a : atoms_) {
      if (!at_or_below(a.x, z_hi)) break;
      s += g(a.x) * a.mass;
    }
    return s;
  }
  if (z_hi <= level_) return 0.0;
  // Stieltjes midpoint sum; cells are geometric next to the level where the
  // law of the overshoot can be singular, and uniform elsewhere.
  const double width = z_hi - level_;
  const double fine = width / 2048.0;
  std::vector<double> edges{level_};
  for (double d = 1e-9 * std::max(1.0, level_); d < fine; d *= 1.5) edges.push_back(level_ + d);
  const auto n_uniform = static_cast<std::size_t>(std::ceil((width - (edges.back() - level_)) / fine));
  const double start = edges.back();
  for (std::size_t i = 1; i <= n_uniform; ++i) {
    edges.push_back(std::min(z_hi, start + (z_hi - start) * static_cast<double>(i) / static_cast<double>(n_uniform)));
  }
  std::vector<double> surv(edges.size());
  parallel_for(edges.size(), [&](std::size_t i) { surv[i] = survival_from_bins(edges[i]); });
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    s += g(0.5 * (edges[i] + edges[i + 1])) * (surv[i] - surv[i + 1]);
  }
  return s;
}

}  // namespace fragopt
