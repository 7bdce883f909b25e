#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "rlt/errors.hpp"

namespace rlt::detail {

struct RootResult {
  double root;
  int iterations;
};

// Newton iteration kept inside a sign bracket for an increasing function.
// `eval(x, f, df)` fills f(x) and f'(x). Requires f(lo) < 0 < f(hi). Stops
// once |f| <= f_tol and the Newton correction is at rounding level, or when
// the bracket has shrunk to a few ulps.
template <class Eval>
RootResult newton_bracketed(Eval&& eval, double lo, double hi, double guess,
                            double f_tol, int max_iter) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double x = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
  for (int it = 1; it <= max_iter; ++it) {
    double f = 0.0;
    double df = 0.0;
    eval(x, f, df);
    if (f == 0.0) return {x, it};
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double step = (df > 0.0 && std::isfinite(df)) ? f / df : NAN;
    const double scale = std::max(1.0, std::abs(x));
    if (std::abs(f) <= f_tol && std::abs(step) <= 8.0 * eps * scale) {
      return {x, it};
    }
    if (hi - lo <= 4.0 * eps * std::max(std::abs(lo), std::abs(hi))) {
      return {x, it};
    }
    const double next = x - step;
    if (std::isfinite(next) && next > lo && next < hi) {
      x = next;
    } else {
      x = 0.5 * (lo + hi);
    }
  }
  throw ConvergenceError("root iteration exceeded " + std::to_string(max_iter) +
                         " steps");
}

}  // namespace rlt::detail
