#include "rlt/core_math.hpp"

#include <cmath>
#include <string>

#include "rlt/errors.hpp"
#include "rlt/roots.hpp"

namespace rlt {

namespace {

constexpr double kTolRoot = 1e-12;
constexpr int kMaxIter = 200;

// Below this |w| = |2 b^2 lambda| the closed forms lose digits to 0/0.
constexpr double kSeriesWindow = 1e-8;
// Wider window for the second derivative, whose closed form cancels as u^3.
constexpr double kSecondSeriesWindow = 1e-2;

// Taylor coefficients of u tanh(u) in w = u^2.
constexpr double kUTanhU[] = {0.0,
                              1.0,
                              -1.0 / 3.0,
                              2.0 / 15.0,
                              -17.0 / 315.0,
                              62.0 / 2835.0,
                              -1382.0 / 155925.0,
                              21844.0 / 6081075.0,
                              -929569.0 / 638512875.0};

void check_b(const ReflectionParams& params) {
  if (!(params.b > 0.0) || !std::isfinite(params.b)) {
    throw DomainError("barrier width b must be positive and finite, got " +
                      std::to_string(params.b));
  }
}

void check_lambda(double lambda, double b) {
  const double lo = extension_floor(b) + domain_guard(b);
  if (!std::isfinite(lambda) || lambda <= lo) {
    throw DomainError("lambda = " + std::to_string(lambda) +
                      " outside (-pi^2/(8b^2), inf) for b = " + std::to_string(b));
  }
}

double sec2(double u) {
  const double c = std::cos(u);
  return 1.0 / (c * c);
}

double sech2(double u) {
  const double c = std::cosh(u);
  return 1.0 / (c * c);
}

}  // namespace

void ReflectionParams::validate() const {
  check_b(*this);
  if (!(x >= 0.0 && x <= b)) {
    throw DomainError("start point x = " + std::to_string(x) + " outside [0, " +
                      std::to_string(b) + "]");
  }
}

double alpha_star(double lambda, const ReflectionParams& params) {
  check_b(params);
  const double b = params.b;
  check_lambda(lambda, b);
  const double w = 2.0 * b * b * lambda;
  if (std::abs(w) < kSeriesWindow) {
    return 2.0 * b * lambda * (1.0 + w * (kUTanhU[2] + w * (kUTanhU[3] + w * kUTanhU[4])));
  }
  if (lambda > 0.0) {
    const double s = std::sqrt(2.0 * lambda);
    return s * std::tanh(b * s);
  }
  const double s = std::sqrt(-2.0 * lambda);
  return -s * std::tan(b * s);
}

double alpha_star_prime(double lambda, const ReflectionParams& params) {
  check_b(params);
  const double b = params.b;
  check_lambda(lambda, b);
  const double w = 2.0 * b * b * lambda;
  if (std::abs(w) < kSeriesWindow) {
    return 2.0 * b *
           (1.0 + w * (2.0 * kUTanhU[2] + w * (3.0 * kUTanhU[3] + w * 4.0 * kUTanhU[4])));
  }
  if (lambda > 0.0) {
    const double u = b * std::sqrt(2.0 * lambda);
    return b * (std::tanh(u) / u + sech2(u));
  }
  const double u = b * std::sqrt(-2.0 * lambda);
  return b * (std::tan(u) / u + sec2(u));
}

double alpha_star_second(double lambda, const ReflectionParams& params) {
  check_b(params);
  const double b = params.b;
  check_lambda(lambda, b);
  const double w = 2.0 * b * b * lambda;
  if (std::abs(w) < kSecondSeriesWindow) {
    double g2 = 0.0;
    for (int k = 8; k >= 2; --k) g2 = g2 * w + k * (k - 1) * kUTanhU[k];
    return 4.0 * b * b * b * g2;
  }
  const double b3 = b * b * b;
  if (lambda > 0.0) {
    const double u = b * std::sqrt(2.0 * lambda);
    const double t = std::tanh(u);
    const double q = sech2(u);
    return (b3 / u) * ((u * q - t) / (u * u) - 2.0 * q * t);
  }
  const double u = b * std::sqrt(-2.0 * lambda);
  const double t = std::tan(u);
  const double q = sec2(u);
  return -(b3 / u) * ((u * q - t) / (u * u) + 2.0 * q * t);
}

RateEval big_v(double alpha, const ReflectionParams& params) {
  check_b(params);
  if (!std::isfinite(alpha)) {
    throw DomainError("alpha must be finite");
  }
  if (alpha == 0.0) {
    return {0.0, 0.0, 1.0 / alpha_star_prime(0.0, params), std::nullopt};
  }
  const double b = params.b;
  double lo = extension_floor(b) + domain_guard(b);
  // nextafter keeps lo strictly inside the domain after rounding.
  lo = std::nextafter(lo, 0.0);
  double hi = 0.0;
  if (alpha > 0.0) {
    lo = 0.0;
    hi = 1.0;
    while (alpha_star(hi, params) <= alpha) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw ConvergenceError("cannot bracket V(alpha)");
    }
  } else if (alpha_star(lo, params) >= alpha) {
    throw ConvergenceError("alpha = " + std::to_string(alpha) +
                           " is below alpha_star at the domain guard");
  }
  auto eval = [&](double lam, double& f, double& df) {
    f = alpha_star(lam, params) - alpha;
    df = alpha_star_prime(lam, params);
  };
  const double root =
      detail::newton_bracketed(eval, lo, hi, alpha > 0.0 ? hi : 0.5 * lo,
                               kTolRoot * std::max(1.0, std::abs(alpha)), kMaxIter)
          .root;
  return {alpha, root, 1.0 / alpha_star_prime(root, params), std::nullopt};
}

double lambda_star(double x, const ReflectionParams& params) {
  check_b(params);
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("lambda_star needs x > 0, got " + std::to_string(x));
  }
  const double target = 1.0 / x;
  const double slope0 = alpha_star_prime(0.0, params);
  if (target == slope0) return 0.0;

  const double b = params.b;
  double lo = 0.0;
  double hi = 0.0;
  if (target > slope0) {
    lo = std::nextafter(extension_floor(b) + domain_guard(b), 0.0);
    if (alpha_star_prime(lo, params) <= target) {
      throw DomainError("x = " + std::to_string(x) + " too close to 0 to resolve lambda_star");
    }
  } else {
    hi = 1.0;
    while (alpha_star_prime(hi, params) >= target) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw ConvergenceError("cannot bracket lambda_star");
    }
  }
  // target - alpha_star' is increasing in lambda.
  auto eval = [&](double lam, double& f, double& df) {
    f = target - alpha_star_prime(lam, params);
    df = -alpha_star_second(lam, params);
  };
  const double guess = target > slope0 ? 0.5 * lo : 0.5 * (lo + hi);
  return detail::newton_bracketed(eval, lo, hi, guess, kTolRoot * target, kMaxIter).root;
}

RateEval v_star(double x, const ReflectionParams& params) {
  check_b(params);
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("v_star needs x >= 0, got " + std::to_string(x));
  }
  if (x == 0.0) {
    return {0.0, -extension_floor(params.b), std::nullopt, std::nullopt};
  }
  const double lam = lambda_star(x, params);
  const double slope = alpha_star(lam, params);
  const double value = std::max(0.0, x * slope - lam);
  return {x, value, slope, lam};
}

std::pair<double, double> scaling_check(double c, double lambda,
                                        const ReflectionParams& params) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw DomainError("scaling factor c must be positive");
  }
  const ReflectionParams scaled{c * params.b, 0.0};
  return {alpha_star(lambda, scaled), alpha_star(c * c * lambda, params) / c};
}

}  // namespace rlt
