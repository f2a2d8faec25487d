#include "fragopt/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <sstream>

#include "fragopt/error.hpp"

namespace fragopt::quad {
namespace {

[[noreturn]] void fail(double a, double b, double estimate, double error, double l1) {
  std::ostringstream os;
  os.precision(6);
  os << "integral on [" << a << ", " << b << "] = " << estimate << " with error estimate " << error
     << " (L1 " << l1 << ")";
  throw Error(ErrorCode::QuadratureFailure, "quadrature", os.str());
}

}  // namespace

double integrate(const Integrand& f, double a, double b, const Options& opts) {
  if (a == b) return 0.0;
  double error = 0.0;
  double l1 = 0.0;
  double value;
  if (std::isfinite(a) && std::isfinite(b)) {
    // Boost's adaptive recursion does not rescale its error estimate by the
    // interval width, so integrate on [-1, 1] where the two agree.
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto g = [&](double t) { return f(mid + half * t) * half; };
    if (opts.abs_tol > 0.0) {
      value = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(g, -1.0, 1.0, 0, opts.rel_tol, &error,
                                                                            &l1);
      if (std::isfinite(value) && error <= opts.abs_tol) return value;
    }
    value = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(g, -1.0, 1.0, opts.max_depth,
                                                                          opts.rel_tol, &error, &l1);
  } else {
    value = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, opts.max_depth, opts.rel_tol,
                                                                          &error, &l1);
  }
  if (!std::isfinite(value)) fail(a, b, value, error, l1);
  if (error > std::max(opts.abs_tol, opts.rel_tol * l1) && error > 1e-15 * l1) fail(a, b, value, error, l1);
  return value;
}

double integrate_singular(const Integrand& f, double a, double b, const Options& opts) {
  if (a == b) return 0.0;
  thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
  double error = 0.0;
  double l1 = 0.0;
  std::size_t levels = 0;
  const double value = integrator.integrate(f, a, b, opts.rel_tol, &error, &l1, &levels);
  if (!std::isfinite(value)) fail(a, b, value, error, l1);
  // tanh-sinh reports the difference of the last two levels, which is very
  // pessimistic once it has converged; accept anything under sqrt(tol).
  if (error > std::max(opts.abs_tol, std::sqrt(opts.rel_tol) * l1)) fail(a, b, value, error, l1);
  return value;
}

double integrate_algebraic_left(const Integrand& f, double a, double b, double exponent,
                                const Options& opts) {
  if (a == b) return 0.0;
  if (!(exponent > -1.0)) {
    throw Error(ErrorCode::DivergentIntegral, "quadrature", "endpoint exponent must exceed -1");
  }
  const double k = 1.0 / (1.0 + exponent);
  const double width = b - a;
  // x = a + width * t^k, dx = width * k * t^{k-1} dt
  auto g = [&](double t) {
    if (t <= 0.0) return 0.0;
    const double tk = std::pow(t, k);
    // underflow at the extreme nodes, whose weights are negligible anyway
    if (!(width * tk > 0.0)) return 0.0;
    return f(a + width * tk) * width * k * tk / t;
  };
  // what is left may still carry a logarithm or a residual power at t = 0
  return integrate_singular(g, 0.0, 1.0, opts);
}

double integrate_pieces(const Integrand& f, const std::vector<double>& breakpoints, const Options& opts) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    total += integrate(f, breakpoints[i], breakpoints[i + 1], opts);
  }
  return total;
}

Rule gauss_jacobi(int n, double a, double b) {
  if (n < 1 || !(a > -1.0) || !(b > -1.0)) {
    throw Error(ErrorCode::InvalidModel, "quadrature", "gauss_jacobi needs n >= 1 and a, b > -1");
  }
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 1));
  const double ab = a + b;
  for (int k = 0; k < n; ++k) {
    if (k == 0) {
      diag(k) = (b - a) / (ab + 2.0);
    } else {
      const double s = 2.0 * k + ab;
      diag(k) = (b * b - a * a) / (s * (s + 2.0));
    }
  }
  for (int k = 1; k < n; ++k) {
    double beta;
    if (k == 1) {
      beta = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      const double s = 2.0 * k + ab;
      beta = 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
    sub(k - 1) = std::sqrt(beta);
  }
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                              std::lgamma(ab + 2.0));
  if (n == 1) {
    rule.nodes[0] = diag(0);
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

double integrate_jacobi_weighted(const Integrand& g, double length, double p, double r, double rel_tol) {
  if (length <= 0.0) return 0.0;
  // u = L (1 + x) / 2: (L-u)^p u^{-r} du = (L/2)^{1+p-r} (1-x)^p (1+x)^{-r} dx
  const double scale = std::pow(length / 2.0, 1.0 + p - r);
  auto apply = [&](int n) {
    const Rule rule = gauss_jacobi(n, p, -r);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rule.weights[i] * g(length * (1.0 + rule.nodes[i]) / 2.0);
    return scale * sum;
  };
  double previous = apply(16);
  for (int n = 32; n <= 1024; n *= 2) {
    const double current = apply(n);
    if (std::abs(current - previous) <= rel_tol * std::abs(current) + 1e-300) return current;
    previous = current;
  }
  throw Error(ErrorCode::QuadratureFailure, "quadrature", "Gauss-Jacobi rule did not converge");
}

}  // namespace fragopt::quad
