#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fragopt/asymptotics.hpp"
#include "fragopt/error.hpp"
#include "support.hpp"

using namespace fragopt;
using namespace fragopt::testing;

namespace {

// two-child conservative atom {b, a} with b^alpha + a^alpha = 1
ModelSpec conservative_at(double alpha, double beta, double a) {
  const double b = std::pow(1.0 - std::pow(a, alpha), 1.0 / alpha);
  return single_atom({b, a}, beta, beta);
}

std::vector<double> small_grid() {
  std::vector<double> g;
  for (int k = 10; k <= 40; k += 5) g.push_back(std::exp(-k));
  return g;
}

std::vector<double> near_one_grid() { return {std::exp(-0.1), std::exp(-0.01), std::exp(-0.001)}; }

std::vector<TheoremRow> rows_of(const TheoremReport& r, const std::string& theorem, const std::string& tag) {
  std::vector<TheoremRow> out;
  for (const auto& x : r.rows) {
    if (x.theorem == theorem && x.case_tag == tag) out.push_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("renewal limit for small thresholds") {
  const FragmentationModel m(split37());
  const auto lim = small_threshold_limit(m);
  CHECK_FALSE(lim.lattice);
  // C / ((α-β) μ₁) with C = √.3 + √.7 - 1
  const double mu = -0.3 * std::log(0.3) - 0.7 * std::log(0.7);
  CHECK(lim.value == doctest::Approx((std::sqrt(0.3) + std::sqrt(0.7) - 1.0) / (0.5 * mu)).epsilon(1e-12));
  CHECK(lim.value == doctest::Approx(1.258574).epsilon(1e-4));
  CHECK(lim.value_literal == doctest::Approx(lim.value / m.alpha()));
  // the scaled energy itself, far out
  const Device d(split37(), 31.0);
  const double eta = std::exp(-30.0);
  CHECK(std::pow(eta, 0.5) * d.psi(30.0) == doctest::Approx(lim.value).epsilon(0.01));

  CHECK(small_threshold_limit(FragmentationModel(half_split())).lattice);
  CHECK_THROWS_AS(small_threshold_limit(FragmentationModel(split37(1.2))), Error);

  double prev = 0.0;
  // cost exponent held at 1/2 while beta climbs to alpha = 1
  for (double b : {0.5, 0.8, 0.9, 0.99}) {
    const double v = small_threshold_limit(FragmentationModel(single_atom({0.3, 0.7}, b, 0.5))).value;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("stationary overshoot") {
  const auto so = stationary_overshoot(FragmentationModel(split37()));
  const double mu = so.normalizer();
  CHECK(mu == doctest::Approx(0.610864).epsilon(1e-6));
  CHECK(so.density(0.2) == doctest::Approx(1.0 / mu));
  CHECK(so.density(1.0) == doctest::Approx(0.3 / mu));
  CHECK(so.density(1.3) == 0.0);
  CHECK(std::abs(so.total_mass() - 1.0) < 1e-8);
  CHECK(so.cdf(2.0) == doctest::Approx(1.0));

  // single jump at log 2: uniform on (0, log 2)
  const auto half = stationary_overshoot(FragmentationModel(half_split()));
  CHECK(half.cdf(std::log(2.0) / 2) == doctest::Approx(0.5));
  CHECK(std::abs(half.total_mass() - 1.0) < 1e-8);
}

TEST_CASE("gap constants") {
  const auto m1 = split37();
  const auto m2 = conservative_at(0.8, 0.6, 0.4);

  SUBCASE("identical models give F = D") {
    const auto k = constants_F_D(m1, m1, 1.0);
    CHECK(k.F == k.D);
    CHECK(k.F == k.D_hat);
    CHECK(k.F > 0.0);
  }

  SUBCASE("positive and increasing in the gap") {
    GapConstants prev;
    for (double lam : {0.01, 0.1, 0.5, 1.0, 2.0}) {
      const auto k = constants_F_D(m1, m2, lam);
      CHECK(k.F > prev.F);
      CHECK(k.D > prev.D);
      CHECK(k.D_hat > prev.D_hat);
      prev = k;
    }
  }

  SUBCASE("discrete pair against a piecewise closed form") {
    const Device d1(m1, 1.25), d2(m2, 1.25);
    const double lam = 1.0;
    const double theta = d1.alpha() - d2.beta();
    // Π̄ and Ψ̂(λ - .) are both piecewise constant
    std::vector<double> cuts{0.0, lam};
    for (const auto& j : d1.levy().jumps()) cuts.push_back(j.x);
    for (double y : d2.renewal().positions()) cuts.push_back(lam - y);
    std::erase_if(cuts, [&](double c) { return c < 0.0 || c > lam; });
    std::sort(cuts.begin(), cuts.end());
    double exact = 0.0;
    for (std::size_t i = 1; i < cuts.size(); ++i) {
      const double a = cuts[i - 1], b = cuts[i];
      if (!(b > a)) continue;
      const double mid = 0.5 * (a + b);
      exact += d2.psi(lam - mid) * d1.levy().tail(mid) * (std::exp(theta * b) - std::exp(theta * a)) / theta;
    }
    CHECK(constants_F_D(d1, d2, lam).F == doctest::Approx(exact).epsilon(1e-10));
  }

  SUBCASE("density pair against a fine midpoint rule") {
    const Device d1(uniform_binary(2.0, 0.5), 1.25), d2(uniform_binary(3.0, 0.3), 1.25);
    const double lam = 1.0;
    const double theta = d1.alpha() - d2.beta();
    const int n = 1 << 20;
    const double h = lam / n;
    double mid = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = (i + 0.5) * h;
      mid += std::exp(theta * u) * d2.psi(lam - u) * d1.levy().tail(u) * h;
    }
    CHECK(constants_F_D(d1, d2, lam).F == doctest::Approx(mid).epsilon(1e-6));
  }
}

TEST_CASE("small-threshold comparisons") {
  const auto grid = small_grid();

  SUBCASE("beta_hat > beta: case (a) holds eventually") {
    const auto r = check_small_threshold_theorems(conservative_at(1.0, 0.5, 0.3), conservative_at(0.8, 0.6, 0.4),
                                                  1.0, grid);
    const auto a = rows_of(r, "vs_first", "a");
    REQUIRE(a.size() == grid.size());
    REQUIRE(r.holds_from_vs_first.has_value());
    for (const auto& x : a) {
      if (x.eta <= *r.holds_from_vs_first) CHECK(x.margin >= 0.0);
    }
    CHECK(r.eps_first > 0.0);
  }

  SUBCASE("beta_hat < beta: the excess grows like eta^(beta_hat - beta)") {
    const auto r = check_small_threshold_theorems(conservative_at(1.0, 0.5, 0.3), conservative_at(0.8, 0.3, 0.4),
                                                  1.0, grid);
    const auto b = rows_of(r, "vs_first", "b");
    REQUIRE(b.size() == grid.size());
    for (const auto& x : b) CHECK(x.scaled > 0.0);
    // slope over the last three grid points
    const auto& p = b[b.size() - 3];
    const auto& q = b.back();
    const double slope = std::log(q.scaled / p.scaled) / std::log(q.eta / p.eta);
    CHECK(slope == doctest::Approx(0.3 - 0.5).epsilon(0.10));
  }

  SUBCASE("identical models: sandwich (c) collapses") {
    const auto r = check_small_threshold_theorems(split37(), split37(), 1.0, grid);
    for (const auto& x : r.rows) {
      CHECK(x.case_tag == "c");
      CHECK(x.scaled == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(x.margin > 0.0);
    }
    CHECK(r.holds_from_vs_first == r.holds_from_vs_second);
  }

  SUBCASE("csv") {
    const auto r = check_small_threshold_theorems(split37(), split37(), 1.0, {std::exp(-10.0)});
    std::ostringstream os;
    write_report_csv(os, r);
    const auto s = os.str();
    CHECK(s.rfind("eta,lhs,rhs,margin,case_tag\n", 0) == 0);
    CHECK(s.find("vs_first/c") != std::string::npos);
    CHECK(std::count(s.begin(), s.end(), '\n') == 3);
  }
}

TEST_CASE("corollary decision table") {
  using P = Procedure;
  auto v = corollary_verdict(0.8, 0.5, 1.0, 0.3);
  CHECK(v.row == 1);
  CHECK(v.order == std::array{P::F1, P::F12, P::F2});
  v = corollary_verdict(1.0, 0.3, 0.8, 0.5);
  CHECK(v.row == 2);
  CHECK(v.order == std::array{P::F2, P::F12, P::F1});
  CHECK(corollary_verdict(1.0, 0.6, 0.8, 0.3).order == std::array{P::F1, P::F2, P::F12});
  CHECK(corollary_verdict(1.0, 0.4, 0.8, 0.3).order == std::array{P::F2, P::F1, P::F12});
  CHECK(corollary_verdict(0.8, 0.3, 1.0, 0.4).order == std::array{P::F12, P::F1, P::F2});
  v = corollary_verdict(0.8, 0.2, 1.0, 0.5);
  CHECK(v.row == 6);
  CHECK(v.order == std::array{P::F12, P::F2, P::F1});

  CHECK_FALSE(corollary_verdict(1.0, 0.5, 1.0, 0.3).determined);
  CHECK_FALSE(corollary_verdict(1.0, 0.5, 0.8, 0.5).determined);
  CHECK_THROWS_AS(corollary_verdict(0.5, 0.6, 1.0, 0.3), Error);

  // exact energies agree with the table for a row-1 pair
  const Device d1(conservative_at(0.8, 0.5, 0.3), 32.0), d2(conservative_at(1.0, 0.3, 0.4), 32.0);
  const auto o = empirical_ordering(d1, d2, TwoStepConfig::from_gap(std::exp(-30.0), 1.0));
  CHECK(o.order == std::array{P::F1, P::F12, P::F2});
  CHECK(o.e12 - o.e2 == doctest::Approx(o.vs_second).epsilon(1e-8));
}

TEST_CASE("regular variation index") {
  auto r = rv_index(FragmentationModel(power_law(0.5)));
  CHECK_FALSE(r.not_rv);
  CHECK(std::abs(r.rho - 0.5) < 0.02);
  r = rv_index(FragmentationModel(power_law(0.3)));
  CHECK(std::abs(r.rho - 0.3) < 0.02);
  CHECK(rv_index(FragmentationModel(half_split())).not_rv);
}

TEST_CASE("Dynkin-Lamperti law") {
  const auto mu = dynkin_lamperti_density(0.5);
  CHECK(std::abs(mu.total_mass() - 1.0) < 1e-8);
  CHECK(mu.cdf(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  // (2/π) arctan √y
  CHECK(mu.cdf(3.0) == doctest::Approx(2.0 / std::numbers::pi * std::atan(std::sqrt(3.0))).epsilon(1e-12));
  CHECK(mu.density(1.0) == doctest::Approx(0.5 / std::numbers::pi));
  CHECK(mu.cdf(mu.quantile(0.3)) == doctest::Approx(0.3).epsilon(1e-10));
  double prev = 1e300;
  for (double rho : {0.5, 0.7, 0.9, 0.99}) {
    const auto d = dynkin_lamperti_density(rho);
    CHECK(std::abs(d.total_mass() - 1.0) < 1e-8);
    CHECK(d.quantile(0.9) < prev);
    prev = d.quantile(0.9);
  }
  CHECK(prev < 1e-3);
  CHECK_THROWS_AS(dynkin_lamperti_density(1.0), Error);
}

TEST_CASE("gamma constants") {
  const auto g = gamma_constants(0.5, 0.5, 2.0);
  const double oracle = std::sqrt(2.0) - 1.0;
  CHECK(std::abs(g.A - oracle) < 1e-9);
  CHECK(std::abs(g.A_hat - oracle) < 1e-9);
  CHECK(std::abs(g.B - oracle) < 1e-9);

  const auto same = gamma_constants(0.3, 0.3, 1.5);
  CHECK(same.A == same.A_hat);

  double prev_gap = 0.0, prev_a = 0.0;
  for (double gamma : {1.01, 1.1, 1.25, 1.5, 1.75, 2.0}) {
    const auto k = gamma_constants(0.5, 0.25, gamma);
    CHECK(k.A - k.A_hat > prev_gap);
    CHECK(k.A > prev_a);
    prev_gap = k.A - k.A_hat;
    prev_a = k.A;
  }
  CHECK_THROWS_AS(gamma_constants(0.5, 0.5, 1.0), Error);
}

TEST_CASE("ratio bounds and infinitesimal efficiency") {
  const FragmentationModel half(power_law(0.5)), quarter(power_law(0.25)), twice(power_law(0.5, 2.0));
  auto q = q_bounds(half, half);
  CHECK(q.limit == QLimit::Finite);
  CHECK(q.q_minus == doctest::Approx(1.0));
  CHECK(q.q_plus == doctest::Approx(1.0));
  CHECK(q_bounds(half, quarter).limit == QLimit::Zero);
  CHECK(q_bounds(quarter, half).limit == QLimit::Infinite);
  q = q_bounds(half, twice);
  CHECK(q.q_minus == doctest::Approx(2.0).epsilon(0.05));
  CHECK(q.q_plus == doctest::Approx(2.0).epsilon(0.05));

  CHECK(inf_efficiency(half, quarter).verdict == InfEff::FirstInfEff);
  CHECK(inf_efficiency(quarter, half).verdict == InfEff::SecondInfEff);
  CHECK(inf_efficiency(half, half).verdict == InfEff::Undetermined);
  CHECK_THROWS_AS(inf_efficiency(FragmentationModel(half_split()), half), Error);
}

TEST_CASE("Tauberian behaviour at 0") {
  const Device d(power_law(0.5), 0.02);
  const double c = d.model().cost_constant();
  for (double x : {1e-2, 1e-3, 1e-4}) {
    CHECK(tauberian_ratio(d, x, 0.5) == doctest::Approx(1.0).epsilon(0.05));
  }
  CHECK(d.psi(1e-4) / (c * d.renewal().cumulative(1e-4)) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("large-threshold comparisons") {
  const Device half(power_law(0.5), 0.25);
  const auto grid = near_one_grid();

  SUBCASE("same device twice: two-step matches second-only") {
    const auto r = check_large_threshold_theorems(half, half, 2.0, grid);
    const auto rem = rows_of(r, "remark", "q_one");
    REQUIRE(rem.size() == grid.size());
    CHECK(rem.back().scaled == doctest::Approx(1.0).epsilon(0.02));
    for (const auto& x : rem) CHECK(x.margin > 0.0);
  }

  const Device quarter(power_law(0.25), 0.25);

  SUBCASE("rho > rho_hat, gamma close to 1: two-step beats second-only") {
    const auto r = check_large_threshold_theorems(half, quarter, 1.05, grid);
    const auto g0 = rows_of(r, "vs_second", "d_gamma0");
    REQUIRE(g0.size() == grid.size());
    CHECK(g0.back().margin > 0.0);
    CHECK(g0.back().lhs < g0.back().rhs);
    CHECK(g0[1].margin > 0.0);
  }

  SUBCASE("rho < rho_hat: the excess over second-only grows") {
    const auto r = check_large_threshold_theorems(quarter, half, 1.05, grid);
    const auto a = rows_of(r, "vs_second", "a");
    REQUIRE(a.size() == grid.size());
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i].scaled > a[i - 1].scaled);
    CHECK(a.back().margin > 0.0);
  }
}
