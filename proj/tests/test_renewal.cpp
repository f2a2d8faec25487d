#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fragopt/error.hpp"
#include "fragopt/levy.hpp"
#include "fragopt/renewal.hpp"
#include "support.hpp"

using namespace fragopt;
using namespace fragopt::testing;

namespace {

struct Moments {
  double mean = 0.0, se = 0.0;
};

Moments passage_occupation(const LevyMeasure& levy, double level, double w, std::size_t n, std::uint64_t seed,
                           double eps = 0.0) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Stream rng(seed, i);
    const double v = sample_passage(levy, level, w, rng, eps).weighted_occupation;
    s += v;
    s2 += v * v;
  }
  const double m = s / n;
  return {m, std::sqrt(std::max(0.0, s2 / n - m * m) / (n - 1))};
}

std::vector<double> overshoot_samples(const LevyMeasure& levy, double level, std::size_t n, std::uint64_t seed,
                                      double eps = 0.0) {
  std::vector<double> z;
  for (std::size_t i = 0; i < n; ++i) {
    Stream rng(seed, i);
    z.push_back(sample_passage(levy, level, 0.0, rng, eps).xi_at_passage);
  }
  std::sort(z.begin(), z.end());
  return z;
}

// sup |F_n - F|, checking the right value and the left limit at each cluster
// of samples; sums of the same jumps in another order differ by rounding
double ks(const std::vector<double>& sorted, const OvershootLaw& law) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] - sorted[i] < 1e-9) ++j;
    d = std::max({d, std::abs(law.cdf(sorted[j]) - (j + 1) / n), std::abs(law.cdf(sorted[i] - 1e-9) - i / n)});
    i = j + 1;
  }
  return d;
}

// Upper bound on sup |F_n - F| from F on a grid of n_grid quantile-ish
// points; both functions are monotone, so each cell is bracketed by its ends.
double ks_bound(const std::vector<double>& sorted, const OvershootLaw& law, std::size_t n_grid) {
  const double n = static_cast<double>(sorted.size());
  std::vector<double> g;
  for (std::size_t k = 0; k <= n_grid; ++k) g.push_back(sorted[std::min(sorted.size() - 1, k * sorted.size() / n_grid)]);
  g.front() = law.level();
  auto fn = [&](double x) {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) / n;
  };
  double d = 0.0;
  double f_prev = law.cdf(g[0]);
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    const double f_next = law.cdf(g[k + 1]);
    d = std::max({d, std::abs(f_next - fn(g[k])), std::abs(fn(g[k + 1]) - f_prev)});
    f_prev = f_next;
  }
  return std::max(d, 1.0 - f_prev);
}

}  // namespace

TEST_CASE("half-split renewal measure is a unit comb") {
  const FragmentationModel m(half_split());
  const auto levy = tilted_levy_measure(m);
  const auto u = renewal_measure(levy, 10.0);
  CHECK(u.backend() == RenewalBackend::Lattice);
  REQUIRE(u.positions().size() == 15);
  for (std::size_t n = 0; n < u.positions().size(); ++n) {
    CHECK(u.positions()[n] == doctest::Approx(n * std::log(2.0)).epsilon(1e-14));
    CHECK(u.masses()[n] == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(u.mass_at_zero() == 1.0);
  // closed intervals
  CHECK(u.cumulative(2 * std::log(2.0)) == doctest::Approx(3.0));
  CHECK(u.cumulative(2 * std::log(2.0) - 1e-6) == doctest::Approx(2.0));
  CHECK(u.cumulative(0.0) == 1.0);
  CHECK(u.cumulative_error(5.0) == 0.0);
}

TEST_CASE("atom at zero is 1/lambda") {
  const FragmentationModel m(finite_model({{0.3, 0.7}, {0.5, 0.25, 0.25}}, {2.0, 1.5}, 0.5, 0.5));
  const auto levy = tilted_levy_measure(m);
  const auto u = renewal_measure(levy, 3.0);
  CHECK(u.mass_at_zero() == doctest::Approx(1.0 / levy.total_mass()).epsilon(1e-14));
  CHECK(levy.total_mass() == doctest::Approx(3.5));
}

TEST_CASE("elementary renewal theorem for (0.3, 0.7)") {
  const FragmentationModel m(split37());
  const auto levy = tilted_levy_measure(m);
  const auto u = renewal_measure(levy, 50.0);
  CHECK(u.backend() == RenewalBackend::Atomic);
  const double mu = 0.3 * std::log(1 / 0.3) + 0.7 * std::log(1 / 0.7);
  CHECK(std::abs(u.cumulative(50.0) / 50.0 * mu - 1.0) < 0.01);
  // masses are monotone in x
  double prev = 0.0;
  for (double x = 0.0; x <= 50.0; x += 0.37) {
    const double c = u.cumulative(x);
    CHECK(c >= prev);
    prev = c;
  }
  CHECK_THROWS_AS(u.cumulative(60.0), Error);
}

TEST_CASE("energy potential closed form on the half-split comb") {
  const FragmentationModel m(half_split());
  const auto u = renewal_measure(tilted_levy_measure(m), 5.0);
  const EnergyPotential psi(m, u);
  CHECK(psi(2 * std::log(2.0)) == doctest::Approx(2 * std::sqrt(2.0) - 1).epsilon(1e-13));
  CHECK(std::abs(psi(2 * std::log(2.0)) - (2 * std::sqrt(2.0) - 1)) < 1e-12);
  CHECK(psi(0.0) == doctest::Approx(m.cost_constant() * u.mass_at_zero()));
  // a hair below zero is zero under the tie tolerance
  CHECK(psi(-1e-14) == psi(0.0));
  CHECK(psi(-1.0) == 0.0);
  CHECK_THROWS_AS(psi(6.0), Error);
}

TEST_CASE("energy potential equals C times the weighted passage occupation") {
  const FragmentationModel m(split37());
  const auto levy = tilted_levy_measure(m);
  const auto u = renewal_measure(levy, 5.0);
  const EnergyPotential psi(m, u);
  const auto mc = passage_occupation(levy, 5.0, m.alpha() - m.beta(), 100000, 11);
  const double c = m.cost_constant();
  CHECK(std::abs(psi(5.0) - c * mc.mean) < 3.0 * c * mc.se);
}

TEST_CASE("energy potential for a density model matches the passage occupation") {
  const FragmentationModel m(uniform_binary());
  const auto levy = tilted_levy_measure(m);
  RenewalOptions o;
  o.mc_paths = 100000;
  o.seed = 5;
  const auto u = renewal_measure(levy, 3.0, o);
  CHECK(u.backend() == RenewalBackend::GridDensity);
  CHECK(u.sample_count() == 100000);
  CHECK(u.mass_at_zero() == doctest::Approx(1.0 / levy.total_mass()));
  const EnergyPotential psi(m, u);
  const auto mc = passage_occupation(levy, 3.0, m.alpha() - m.beta(), 100000, 99);
  const double c = m.cost_constant();
  // both sides are Monte Carlo; the renewal estimate has comparable error
  const double se = std::hypot(c * mc.se, psi(3.0) * u.cumulative_error(3.0) / u.cumulative(3.0));
  CHECK(std::abs(psi(3.0) - c * mc.mean) < 3.0 * se);
  CHECK(u.cumulative_error(3.0) > 0.0);
}

TEST_CASE("grid backend reproduces the lattice convolution") {
  // jumps log 2 and log 4 with random choice
  const FragmentationModel m(finite_model({{0.5, 0.5}, {0.25, 0.25, 0.25, 0.25}}, {1.0, 1.0}, 0.5, 0.5));
  const auto levy = tilted_levy_measure(m);
  REQUIRE(levy.lattice_span().has_value());
  const double h = std::log(2.0);
  const auto exact = renewal_measure(levy, 6 * h);
  CHECK(exact.backend() == RenewalBackend::Lattice);
  RenewalOptions o;
  o.force_grid = true;
  o.resolution = h / 8;
  o.mc_paths = 50000;
  const auto grid = renewal_measure(levy, 6 * h, o);
  for (int n = 0; n < 6; ++n) {
    const double x = (n + 0.5) * h;
    const double se = grid.cumulative_error(x);
    CHECK(std::abs(grid.cumulative(x) - exact.cumulative(x)) <= 4.0 * se + 1e-12);
  }
  o.resolution = h / 2;
  CHECK_THROWS_AS(renewal_measure(levy, 6 * h, o), Error);
}

TEST_CASE("renewal CSV columns") {
  const FragmentationModel m(half_split());
  const auto u = renewal_measure(tilted_levy_measure(m), 1.0);
  std::ostringstream os;
  u.write_csv(os);
  CHECK(os.str() == "x,mass_or_density,cumulative\n0,1,1\n0.6931471805599453,1,2\n");
}

TEST_CASE("discrete overshoot law against first-passage samples") {
  const FragmentationModel m(split37());
  const auto levy = tilted_levy_measure(m);
  const auto u = renewal_measure(levy, 4.0);
  const auto law = overshoot_law(levy, u, 4.0);
  CHECK(law.is_atomic());
  CHECK(law.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& a : law.atoms()) CHECK(a.x > 4.0);
  const auto z = overshoot_samples(levy, 4.0, 100000, 3);
  CHECK(ks(z, law) < 0.01);
  // E[ξ_T] by Wald: mean jump times expected number of jumps
  const double ez = law.expectation([](double x) { return x; }, 100.0);
  CHECK(ez == doctest::Approx(levy.mean() * u.cumulative(4.0) * levy.total_mass()).epsilon(1e-10));
}

TEST_CASE("half-split overshoot at a lattice point is strict") {
  const FragmentationModel m(half_split());
  const auto levy = tilted_levy_measure(m);
  const auto u = renewal_measure(levy, 3.0);
  const double l = 2 * std::log(2.0);
  const auto law = overshoot_law(levy, u, l);
  REQUIRE(law.atoms().size() == 1);
  CHECK(law.atoms()[0].x == doctest::Approx(3 * std::log(2.0)));
  CHECK(law.atoms()[0].mass == doctest::Approx(1.0));
}

TEST_CASE("density overshoot law against first-passage samples") {
  const FragmentationModel m(uniform_binary());
  const auto levy = tilted_levy_measure(m);
  RenewalOptions o;
  o.mc_paths = 100000;
  o.seed = 21;
  const auto u = renewal_measure(levy, 2.0, o);
  const auto law = overshoot_law(levy, u, 2.0);
  CHECK_FALSE(law.is_atomic());
  CHECK(std::abs(law.total_mass() - 1.0) < 5e-3);
  const auto z = overshoot_samples(levy, 2.0, 20000, 8);
  CHECK(ks_bound(z, law, 400) < 0.02);
  const double ez = law.expectation([](double x) { return x; }, 40.0);
  double s = 0.0;
  for (double v : z) s += v;
  CHECK(ez == doctest::Approx(s / z.size()).epsilon(5e-3));
}
