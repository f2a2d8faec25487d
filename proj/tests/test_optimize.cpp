#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "fragopt/error.hpp"
#include "fragopt/optimize.hpp"
#include "support.hpp"

using namespace fragopt;
using namespace fragopt::testing;

namespace {

ModelSpec conservative_at(double alpha, double beta, double a) {
  const double b = std::pow(1.0 - std::pow(a, alpha), 1.0 / alpha);
  return single_atom({b, a}, beta, beta);
}

const double kEta0 = std::exp(-25.0);

struct Pair {
  Device d1, d2;
};

Pair devices(double a, double b, double ah, double bh) {
  const double x = default_x_max(kEta0);
  return {Device(conservative_at(a, b, 0.3), x), Device(conservative_at(ah, bh, 0.4), x)};
}

}  // namespace

TEST_CASE("sweep endpoints and grid") {
  const auto p = devices(0.8, 0.3, 1.0, 0.4);
  OptimizeOptions o;
  o.n_points = 9;
  const auto t = sweep(p.d1, p.d2, kEta0, o);
  REQUIRE(t.size() == 9);
  CHECK(t.front().eta == 1.0);
  CHECK(t.front().ell_eta == 0.0);
  CHECK(t.back().ell_eta == doctest::Approx(25.0));
  CHECK(t[1].ell_eta == doctest::Approx(25.0 * o.ell_floor));
  for (std::size_t i = 2; i < t.size(); ++i) {
    CHECK(t[i].ell_eta / t[i - 1].ell_eta == doctest::Approx(t[2].ell_eta / t[1].ell_eta));
  }
  // second-only at η = 1, first-only at η = η0
  CHECK(t.front().energy == doctest::Approx(p.d2.psi(25.0)).epsilon(1e-13));
  CHECK(t.back().energy == doctest::Approx(p.d1.psi(25.0)).epsilon(1e-13));

  std::ostringstream os;
  write_sweep_csv(os, t);
  const auto csv = os.str();
  CHECK(csv.rfind("eta,ell_eta,energy\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);

  o.n_points = 2;
  CHECK_THROWS_AS(sweep(p.d1, p.d2, kEta0, o), Error);
}

TEST_CASE("identical devices: flat objective, tie goes to eta0") {
  const Device d(split37(), default_x_max(kEta0));
  const auto r = minimize_eta(d, d, kEta0);
  for (const auto& s : r.sweep_table) CHECK(s.energy == doctest::Approx(r.energy_first).epsilon(1e-12));
  CHECK(r.boundary_flag == BoundaryFlag::AtEta0);
  CHECK(r.eta_star == kEta0);
}

TEST_CASE("boundary and interior patterns") {
  SUBCASE("F1-dominant") {
    const auto p = devices(0.8, 0.5, 1.0, 0.3);
    const auto r = minimize_eta(p.d1, p.d2, kEta0);
    CHECK(r.boundary_flag == BoundaryFlag::AtEta0);
    CHECK(r.energy_star == r.energy_first);
  }
  SUBCASE("F2-dominant") {
    const auto p = devices(1.0, 0.3, 0.8, 0.5);
    const auto r = minimize_eta(p.d1, p.d2, kEta0);
    CHECK(r.boundary_flag == BoundaryFlag::AtOne);
    CHECK(r.eta_star == 1.0);
    CHECK(r.energy_star == r.energy_second);
  }
  SUBCASE("F12-favourable") {
    const auto p = devices(0.8, 0.3, 1.0, 0.4);
    const auto r = minimize_eta(p.d1, p.d2, kEta0);
    CHECK(r.boundary_flag == BoundaryFlag::Interior);
    CHECK(r.eta_star > kEta0);
    CHECK(r.eta_star < 1.0);
    const double gap = std::min(r.energy_first, r.energy_second) - r.energy_star;
    CHECK(gap > 5.0 * r.energy_error);
    for (const auto& s : r.sweep_table) CHECK(r.energy_star <= s.energy);

    // a finer sweep cannot make the answer worse by more than the tolerance
    OptimizeOptions fine;
    fine.n_points = 81;
    const auto r2 = minimize_eta(p.d1, p.d2, kEta0, fine);
    CHECK(r2.energy_star <= r.energy_star + 1e-8 * r.energy_star);

    const auto j = nlohmann::json::parse(result_json(r));
    CHECK(j["boundary_flag"] == "interior");
    CHECK(j["energy_star"].get<double>() == r.energy_star);
    CHECK(j["sweep_points"] == r.sweep_table.size());
  }
}

TEST_CASE("ModelSpec overload and argument checks") {
  const auto r = minimize_eta(split37(), conservative_at(1.0, 0.6, 0.4), std::exp(-5.0));
  CHECK(r.eta_star >= std::exp(-5.0));
  CHECK(r.eta_star <= 1.0);
  CHECK_THROWS_AS(minimize_eta(split37(), split37(), 1.0), Error);
  OptimizeOptions o;
  o.tol = 0.0;
  CHECK_THROWS_AS(minimize_eta(split37(), split37(), 0.1, o), Error);
}
