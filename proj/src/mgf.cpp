#include "rlt/mgf.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rlt/errors.hpp"

namespace rlt {

namespace {

constexpr double kLiteralOverflow = 300.0;

void check_x(const ReflectionParams& params, double x) {
  if (!(x >= 0.0 && x <= params.b)) {
    throw DomainError("x = " + std::to_string(x) + " outside [0, " +
                      std::to_string(params.b) + "]");
  }
}

// Returns lambda - V(alpha) after rejecting queries at or beyond the pole.
double check_domain(const MgfQuery& q) {
  if (!std::isfinite(q.lambda) || !std::isfinite(q.alpha)) {
    throw DomainError("lambda and alpha must be finite");
  }
  const double v = big_v(q.alpha, q.params).value;
  const double margin = q.lambda - v;
  if (margin <= 1e-9 * std::max(1.0, std::abs(v))) {
    throw DomainError("lambda = " + std::to_string(q.lambda) +
                      " not above V(alpha) = " + std::to_string(v) +
                      "; the transform diverges");
  }
  return margin;
}

// cosh((b-x)s)/cosh(bs) for lambda > 0 and its cos continuation below 0.
double boundary_ratio(double b, double lambda, double x) {
  if (lambda == 0.0) return 1.0;
  if (lambda > 0.0) {
    const double s = std::sqrt(2.0 * lambda);
    return std::exp(-x * s) * (1.0 + std::exp(-2.0 * (b - x) * s)) /
           (1.0 + std::exp(-2.0 * b * s));
  }
  const double s = std::sqrt(-2.0 * lambda);
  return std::cos((b - x) * s) / std::cos(b * s);
}

// Around lambda = 0 both alpha*/lambda and (1 - ratio)/lambda have regular
// Taylor series; f_hat = [alpha*/lambda - alpha (1 - ratio)/lambda] / (alpha* - alpha).
double f_hat_series(const MgfQuery& q, double x) {
  const double b = q.params.b;
  const double c = b - x;
  const double lam = q.lambda;
  const double w = 2.0 * b * b * lam;
  const double a_over_lam =
      2.0 * b * (1.0 + w * (-1.0 / 3.0 + w * (2.0 / 15.0 + w * (-17.0 / 315.0))));

  // cosh(z s) = sum_k z^{2k} (2 lambda)^k / (2k)!
  double diff_over_lam = 0.0;
  double b_pow = 1.0;
  double c_pow = 1.0;
  double two_lam_pow = 1.0;  // (2 lambda)^{k-1}
  double fact = 1.0;          // (2k)!
  for (int k = 1; k <= 5; ++k) {
    b_pow *= b * b;
    c_pow *= c * c;
    fact *= (2.0 * k - 1.0) * (2.0 * k);
    diff_over_lam += (b_pow - c_pow) * 2.0 * two_lam_pow / fact;
    two_lam_pow *= 2.0 * lam;
  }
  const double cosh_b = lam >= 0.0 ? std::cosh(b * std::sqrt(2.0 * lam))
                                   : std::cos(b * std::sqrt(-2.0 * lam));
  const double one_minus_ratio_over_lam = diff_over_lam / cosh_b;
  const double astar = lam * a_over_lam;
  return (a_over_lam - q.alpha * one_minus_ratio_over_lam) / (astar - q.alpha);
}

}  // namespace

double OdeResidual::max() const { return std::max({interior, lower, upper}); }

MgfValue f_hat(const MgfQuery& q, double x) {
  q.params.validate();
  check_x(q.params, x);
  const double margin = check_domain(q);
  const double b = q.params.b;

  if (std::abs(q.lambda) < 1e-6 * std::max(1.0, 1.0 / (b * b))) {
    return {f_hat_series(q, x), false, margin};
  }
  const double astar = alpha_star(q.lambda, q.params);
  const double ratio = boundary_ratio(b, q.lambda, x);
  const double value = 1.0 / q.lambda + ratio * q.alpha / (q.lambda * (astar - q.alpha));
  return {value, true, margin};
}

double hitting_laplace(const ReflectionParams& params, double lambda, double x) {
  params.validate();
  check_x(params, x);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("hitting_laplace needs lambda > 0, got " + std::to_string(lambda));
  }
  return boundary_ratio(params.b, lambda, x);
}

OdeResidual ode_residual(const MgfQuery& q, int grid_n) {
  if (grid_n < 16) {
    throw ConfigError("ode_residual needs grid_n >= 16");
  }
  const double b = q.params.b;
  const double h = b / grid_n;
  std::vector<double> f(static_cast<std::size_t>(grid_n) + 1);
  for (int i = 0; i <= grid_n; ++i) {
    // Pin the last node to b exactly so rounding never leaves [0, b].
    const double xi = i == grid_n ? b : i * h;
    f[i] = f_hat(q, xi).value;
  }
  OdeResidual r;
  for (int i = 1; i < grid_n; ++i) {
    const double fxx = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
    r.interior = std::max(r.interior, std::abs(0.5 * fxx - q.lambda * f[i] + 1.0));
  }
  const int n = grid_n;
  const double fx0 = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  const double fxb = (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * h);
  r.lower = std::abs(fx0 + q.alpha * f[0]);
  r.upper = std::abs(fxb);
  return r;
}

MgfDecomposition f_hat_decomposition(const MgfQuery& q, double x) {
  q.params.validate();
  check_x(q.params, x);
  check_domain(q);
  if (!(q.lambda > 0.0)) {
    throw DomainError("literal form needs lambda > 0");
  }
  const double b = q.params.b;
  const double s = std::sqrt(2.0 * q.lambda);
  if (b * s > kLiteralOverflow) {
    throw OverflowError("b sqrt(2 lambda) = " + std::to_string(b * s) +
                        " overflows the literal form");
  }
  const double astar = alpha_star(q.lambda, q.params);
  MgfDecomposition d;
  d.a = q.alpha * std::exp(-b * s) / std::cosh(b * s) /
        (2.0 * q.lambda * (astar - q.alpha));
  d.b = std::exp(2.0 * s * b) * d.a;
  d.direct_value = 1.0 / q.lambda + std::exp(x * s) * d.a + std::exp(-x * s) * d.b;
  return d;
}

}  // namespace rlt
