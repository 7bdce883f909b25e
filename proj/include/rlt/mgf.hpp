#pragma once

#include "rlt/core_math.hpp"

namespace rlt {

/// Resolvent query: tilt alpha on L and exponential rate lambda. Real lambda
/// only; the transform converges for lambda > V(alpha).
struct MgfQuery {
  ReflectionParams params;
  double lambda = 1.0;
  double alpha = 0.0;
};

/// f_hat(x; lambda, alpha) = (1/lambda) E_x exp(alpha L_tau), tau ~ Exp(lambda).
struct MgfValue {
  double value = 0.0;
  /// False when the removable-singularity series near lambda = 0 was used.
  bool stable_form_used = true;
  /// lambda - V(alpha).
  double domain_margin = 0.0;
};

/// Closed-form resolvent, evaluated in the cosh-ratio form
///   1/lambda + [cosh((b-x)s) / cosh(bs)] alpha / (lambda (alpha*(lambda) - alpha)),
/// s = sqrt(2 lambda), with the cos-ratio continuation for lambda < 0.
MgfValue f_hat(const MgfQuery& q, double x);

/// E_x exp(-lambda H_0) = cosh((b-x) sqrt(2 lambda)) / cosh(b sqrt(2 lambda)).
double hitting_laplace(const ReflectionParams& params, double lambda, double x);

struct OdeResidual {
  /// max over interior grid points of |f_xx / 2 - lambda f + 1|
  double interior = 0.0;
  /// |f_x(0) + alpha f(0)|
  double lower = 0.0;
  /// |f_x(b)|
  double upper = 0.0;

  double max() const;
};

/// Finite-difference residuals of the resolvent ODE and its Robin/Neumann
/// boundary conditions on a uniform grid of grid_n + 1 points. Second-order
/// accurate, so every entry scales like (b / grid_n)^2.
OdeResidual ode_residual(const MgfQuery& q, int grid_n);

struct MgfDecomposition {
  double a = 0.0;
  double b = 0.0;
  /// 1/lambda + e^{x s} A + e^{-x s} B
  double direct_value = 0.0;
};

/// Literal exponential-sum form with its coefficients A and B. Needs
/// lambda > max(V(alpha), 0); throws OverflowError once b sqrt(2 lambda) > 300.
MgfDecomposition f_hat_decomposition(const MgfQuery& q, double x);

}  // namespace rlt
