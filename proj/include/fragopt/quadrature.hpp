#pragma once

#include <functional>
#include <vector>

namespace fragopt::quad {

using Integrand = std::function<double(double)>;

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  unsigned max_depth = 18;
};

/// Adaptive Gauss-Kronrod (21 point) on [a, b]. Throws QuadratureFailure if
/// the error estimate exceeds max(abs_tol, rel_tol * L1).
double integrate(const Integrand& f, double a, double b, const Options& opts = {});

/// Tanh-sinh on [a, b]; tolerates integrable singularities at either endpoint.
double integrate_singular(const Integrand& f, double a, double b, const Options& opts = {});

/// Integrand behaves like (x - a)^exponent near a, exponent > -1. The
/// substitution x = a + (b - a) t^{1/(1+exponent)} leaves a bounded integrand
/// which is then handed to tanh-sinh.
double integrate_algebraic_left(const Integrand& f, double a, double b, double exponent,
                                const Options& opts = {});

/// Sum of integrate() over consecutive pieces [p0,p1], [p1,p2], ...
double integrate_pieces(const Integrand& f, const std::vector<double>& breakpoints,
                        const Options& opts = {});

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Jacobi rule for the weight (1-x)^a (1+x)^b on [-1, 1], a, b > -1,
/// by Golub-Welsch.
Rule gauss_jacobi(int n, double a, double b);

inline Rule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

/// ∫_0^L (L-u)^p u^{-r} g(u) du for smooth g, r < 1, p > -1, using a
/// Gauss-Jacobi rule mapped to [0, L]. The node count is doubled until two
/// successive rules agree to rel_tol.
double integrate_jacobi_weighted(const Integrand& g, double length, double p, double r,
                                 double rel_tol = 1e-13);

}  // namespace fragopt::quad
