#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fragopt/error.hpp"
#include "fragopt/levy.hpp"
#include "fragopt/model.hpp"
#include "support.hpp"

using namespace fragopt;
using namespace fragopt::testing;
using doctest::Approx;

TEST_CASE("mass partitions") {
  const MassPartition p({0.2, 0.0, 0.5, 0.3});
  REQUIRE(p.size() == 3);
  CHECK(p.masses()[0] == 0.5);
  CHECK(p.masses()[2] == 0.2);
  CHECK(MassPartition({1.0}).is_unit());
  CHECK_FALSE(MassPartition({0.5, 0.5}).is_unit());
  CHECK_THROWS_AS(MassPartition({0.7, 0.4}), Error);
  CHECK_THROWS_AS(MassPartition({-0.1}), Error);
}

TEST_CASE("kappa on a single atom") {
  const FragmentationModel m(half_split());
  CHECK(kappa(m, 1.0) == Approx(0.0).epsilon(1e-15));
  CHECK(kappa(m, 2.0) == Approx(0.5));
  CHECK(kappa(m, 0.0) == Approx(-1.0));
}

TEST_CASE("malthusian exponent") {
  CHECK(FragmentationModel(half_split()).alpha() == Approx(1.0).epsilon(1e-12));
  CHECK(FragmentationModel(split37()).alpha() == Approx(1.0).epsilon(1e-12));
  const FragmentationModel d(single_atom({0.4, 0.4}, 0.3, 0.5));
  CHECK(d.alpha() == Approx(0.756470797366).epsilon(1e-11));
  CHECK(std::abs(d.kappa(d.alpha())) <= kRootTol);
  // conservative catalog: alpha = 1
  for (const auto& spec : {single_atom({0.5, 0.3, 0.2}, 0.5, 0.5),
                           finite_model({{0.6, 0.4}, {0.5, 0.25, 0.25}}, {1.0, 0.5}, 0.5, 0.5),
                           power_law(0.5), power_law(0.3), uniform_binary()}) {
    const FragmentationModel m(spec);
    CHECK(m.alpha() == Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(m.kappa(m.alpha())) <= kRootTol);
  }
}

TEST_CASE("cost constant") {
  CHECK(FragmentationModel(single_atom({0.5, 0.5}, 0.5, 0.5)).cost_constant() == Approx(std::sqrt(2.0) - 1.0));
  CHECK(FragmentationModel(single_atom({0.5, 0.5}, 0.5, 1.0)).cost_constant() == Approx(0.0).epsilon(1e-15));
  CHECK(FragmentationModel(split37()).cost_constant() == Approx(0.384382584039).epsilon(1e-11));
  // potential cost equals -kappa(beta_cost)
  for (double bc : {0.2, 0.5, 0.8, 1.5}) {
    const FragmentationModel m(finite_model({{0.6, 0.4}, {0.5, 0.25, 0.25}, {0.3}}, {1.0, 0.5, 0.2}, 0.1, bc));
    CHECK(std::abs(m.cost_constant() + m.kappa(bc)) <= 1e-10);
  }
  // C <= 0 only warns
  const FragmentationModel w(single_atom({0.5, 0.5}, 0.5, 1.0));
  CHECK_FALSE(w.warnings().empty());
}

TEST_CASE("per-atom and custom costs") {
  FiniteDiscrete d;
  d.atoms.push_back({MassPartition({0.5, 0.5}), 2.0, 0.25});
  d.atoms.push_back({MassPartition({0.7, 0.2}), 1.0, 1.5});
  const FragmentationModel m(ModelSpec{"t", d, PerAtomCost{}, 0.5});
  CHECK(m.cost_constant() == Approx(2.0 * 0.25 + 1.5));
  CHECK(m.atom_costs().size() == 2);
  const FragmentationModel c(ModelSpec{"c", BinaryDensity{Bounded::uniform(2.0)},
                                        CustomCost{"sqrt", [](const MassPartition& s) {
                                                     double v = -1.0;
                                                     for (double x : s.masses()) v += std::sqrt(x);
                                                     return v;
                                                   }},
                                        0.5});
  CHECK(c.cost_constant() == Approx(-c.kappa(0.5)).epsilon(1e-9));
}

TEST_CASE("m(alpha) and the mean jump") {
  const FragmentationModel h(half_split());
  CHECK(h.m_alpha() == Approx(std::numbers::ln2));
  const FragmentationModel s(split37());
  CHECK(s.m_alpha() == Approx(0.610864302055).epsilon(1e-11));
  const FragmentationModel d(single_atom({0.4, 0.4}, 0.3, 0.5));
  CHECK(d.m_alpha() == Approx(d.alpha() * d.mean_jump()));
  CHECK(d.mean_jump() == Approx(std::log(2.5)).epsilon(1e-12));
  CHECK_THROWS_AS(FragmentationModel(single_atom({1.0}, 0.5, 0.5)), Error);
}

TEST_CASE("binary densities") {
  const FragmentationModel pl(power_law(0.5));
  CHECK(pl.kappa(2.0) == Approx(2.35702260395515841).epsilon(1e-10));
  CHECK(pl.mean_jump() == Approx(5.0904724092192498).epsilon(1e-9));
  CHECK_FALSE(pl.finite_activity());
  CHECK(pl.p_lower() == 0.5);
  CHECK_THROWS_AS(pl.kappa(0.5), Error);
  CHECK_THROWS_AS(pl.kappa(0.2), Error);
  const FragmentationModel u(uniform_binary());
  CHECK(u.kappa(2.0) == Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(u.mean_jump() == Approx(0.5).epsilon(1e-12));
  CHECK(u.nu_mass() == Approx(1.0).epsilon(1e-12));
  const auto tab = Bounded::table({0.1, 0.3, 0.5}, {2.0, 2.0, 2.0});
  const FragmentationModel t(ModelSpec{"tab", BinaryDensity{tab}, PotentialCost{0.5}, 0.5});
  CHECK(t.kappa(2.0) == Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("kappa is increasing and concave") {
  for (const auto& spec : {split37(), single_atom({0.4, 0.4}, 0.3, 0.5), power_law(0.5), uniform_binary()}) {
    const FragmentationModel m(spec);
    const double lo = std::max(m.p_lower() + 0.1, -0.5);
    double prev = m.kappa(lo);
    double prev_slope = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 10; ++i) {
      const double q = lo + 0.3 * i;
      const double k = m.kappa(q);
      const double slope = (k - prev) / 0.3;
      CHECK(k > prev);
      CHECK(slope <= prev_slope * (1.0 + 1e-9));
      CHECK(k < m.nu_mass());
      prev = k;
      prev_slope = slope;
    }
  }
}

TEST_CASE("m(alpha) = alpha * mean of the tilted Levy measure") {
  for (const auto& spec : {split37(), single_atom({0.4, 0.4}, 0.3, 0.5),
                           finite_model({{0.6, 0.3}, {0.25, 0.25, 0.25}}, {1.0, 0.5}, 0.2, 0.5)}) {
    const FragmentationModel m(spec);
    const LevyMeasure pi = tilted_levy_measure(m);
    double mean = 0.0;
    for (const auto& j : pi.jumps()) mean += j.x * j.mass;
    CHECK(m.m_alpha() == Approx(m.alpha() * mean).epsilon(1e-12));
  }
}

TEST_CASE("validate") {
  const auto r = validate(half_split());
  CHECK(r.valid);
  CHECK(*r.alpha == Approx(1.0));
  CHECK(r.lattice);
  CHECK(*r.lattice_span == Approx(std::numbers::ln2));
  CHECK_FALSE(validate(split37()).lattice);
  FiniteDiscrete bad;
  bad.atoms.push_back({MassPartition({1.0}), 1.0, {}});
  const auto rb = validate(ModelSpec{"bad", bad, PotentialCost{0.5}, 0.5});
  CHECK_FALSE(rb.valid);
  CHECK_FALSE(rb.violations.empty());
  const auto rp = validate(power_law(0.5));
  CHECK(rp.valid);
  CHECK(rp.infinite_activity);
  CHECK_FALSE(validate(power_law(1.2)).valid);
}
