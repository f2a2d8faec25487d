#pragma once

#include <cmath>
#include <vector>

#include "fragopt/model.hpp"

namespace fragopt::testing {

inline ModelSpec finite_model(std::vector<std::vector<double>> atoms, std::vector<double> weights, double beta,
                              double beta_cost, const char* name = "m") {
  FiniteDiscrete d;
  for (std::size_t i = 0; i < atoms.size(); ++i) d.atoms.push_back({MassPartition(atoms[i]), weights[i], {}});
  return ModelSpec{name, d, PotentialCost{beta_cost}, beta};
}

inline ModelSpec single_atom(std::vector<double> s, double beta, double beta_cost) {
  return finite_model({std::move(s)}, {1.0}, beta, beta_cost);
}

inline ModelSpec half_split(double beta = 0.5) { return single_atom({0.5, 0.5}, beta, beta); }
inline ModelSpec split37(double beta = 0.5) { return single_atom({0.3, 0.7}, beta, beta); }

inline ModelSpec power_law(double rho, double c = 1.0, double beta = 0.5, double beta_cost = 0.8) {
  return ModelSpec{"powerlaw", BinaryDensity{PowerLaw{c, rho}}, PotentialCost{beta_cost}, beta};
}

inline ModelSpec uniform_binary(double c = 2.0, double beta = 0.5) {
  return ModelSpec{"uniform", BinaryDensity{Bounded::uniform(c)}, PotentialCost{beta}, beta};
}

}  // namespace fragopt::testing
