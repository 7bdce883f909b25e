#pragma once

#include <numbers>
#include <optional>
#include <utility>

namespace rlt {

/// Barrier width and start point of Brownian motion reflected on [0, b].
struct ReflectionParams {
  double b = 1.0;
  double x = 0.0;

  /// Throws DomainError unless b > 0 and 0 <= x <= b.
  void validate() const;
};

/// V or V* evaluated at a point. `derivative` is empty for V*(0), where the
/// rate function is continuous but not differentiable; `lambda_star` is only
/// filled for V* queries at x > 0.
struct RateEval {
  double point = 0.0;
  double value = 0.0;
  std::optional<double> derivative;
  std::optional<double> lambda_star;
};

/// Left end of the real domain of alpha_star: -pi^2 / (8 b^2).
inline double extension_floor(double b) {
  return -std::numbers::pi * std::numbers::pi / (8.0 * b * b);
}

/// Distance kept from extension_floor so tan() stays finite.
inline double domain_guard(double b) { return 1e-9 * -extension_floor(b); }

/// sqrt(2 lambda) tanh(b sqrt(2 lambda)) for lambda >= 0, continued as
/// -sqrt(-2 lambda) tan(b sqrt(-2 lambda)) down to extension_floor(b).
double alpha_star(double lambda, const ReflectionParams& params);

/// d/dlambda alpha_star; strictly positive, equal to 2b at lambda = 0.
double alpha_star_prime(double lambda, const ReflectionParams& params);

/// Second derivative; strictly negative on the whole domain.
double alpha_star_second(double lambda, const ReflectionParams& params);

/// Inverse of alpha_star: the limiting scaled log-MGF of L_t.
/// `derivative` holds V'(alpha) = 1 / alpha_star'(V(alpha)).
RateEval big_v(double alpha, const ReflectionParams& params);

/// Unique lambda with alpha_star'(lambda) = 1/x, for x > 0.
double lambda_star(double x, const ReflectionParams& params);

/// Legendre transform V*(x) = sup_alpha [alpha x - V(alpha)] and its slope.
RateEval v_star(double x, const ReflectionParams& params);

/// Brownian scaling pair (alpha*_{cb}(lambda), alpha*_b(c^2 lambda) / c).
std::pair<double, double> scaling_check(double c, double lambda,
                                        const ReflectionParams& params);

}  // namespace rlt
