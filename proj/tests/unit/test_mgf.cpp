#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "rlt/core_math.hpp"
#include "rlt/errors.hpp"
#include "rlt/mgf.hpp"

using namespace rlt;
using doctest::Approx;

namespace {

MgfQuery query(double lambda, double alpha, double b = 1.0) { return {{b, 0.0}, lambda, alpha}; }

double fh(double lambda, double alpha, double x, double b = 1.0) {
  return f_hat(query(lambda, alpha, b), x).value;
}

// Second-order finite-difference solve of f''/2 = lambda f - 1 with
// f'(0) + alpha f(0) = 0 and f'(b) = 0 (ghost-node boundary rows), Thomas algorithm.
std::vector<double> bvp_solve(double lambda, double alpha, double b, int n) {
  const double h = b / n;
  std::vector<double> lo(n + 1), di(n + 1), up(n + 1), rhs(n + 1, -1.0);
  for (int i = 0; i <= n; ++i) {
    lo[i] = up[i] = 0.5 / (h * h);
    di[i] = -1.0 / (h * h) - lambda;
  }
  // ghost f_{-1} = f_1 + 2h alpha f_0, f_{n+1} = f_{n-1}
  di[0] += 0.5 / (h * h) * 2 * h * alpha;
  up[0] *= 2;
  lo[n] *= 2;
  for (int i = 1; i <= n; ++i) {
    const double m = lo[i] / di[i - 1];
    di[i] -= m * up[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  std::vector<double> f(n + 1);
  f[n] = rhs[n] / di[n];
  for (int i = n - 1; i >= 0; --i) f[i] = (rhs[i] - up[i] * f[i + 1]) / di[i];
  return f;
}

}  // namespace

TEST_CASE("f_hat reference values") {
  for (double x : {0.0, 0.3, 1.0}) CHECK(fh(2.0, 0.0, x) == Approx(0.5).epsilon(1e-15));
  CHECK(fh(0.5, -1.0, 1.0) == Approx(1.2642411176571153568).epsilon(1e-14));
  CHECK(fh(0.5, -1.0, 0.0) == Approx(0.86466471676338730811).epsilon(1e-14));
  const MgfValue v = f_hat(query(0.5, -1.0), 0.0);
  CHECK(v.stable_form_used);
  CHECK(v.domain_margin == Approx(0.5 - big_v(-1.0, {1.0, 0.0}).value).epsilon(1e-14));
  CHECK(fh(0.5, -1.0, 0.0) == Approx(0.76159415595576488812 / (0.5 * 1.76159415595576488812)));
}

TEST_CASE("f_hat solves the boundary value problem") {
  const int n = 4000;
  for (auto [lam, alpha, b] : std::vector<std::tuple<double, double, double>>{
           {0.5, -1.0, 1.0}, {2.0, 1.0, 1.0}, {1.0, -3.0, 1.0}, {0.3, -0.5, 2.0},
           {-0.2, -2.0, 1.0}, {8.0, 3.0, 0.5}}) {
    const auto f = bvp_solve(lam, alpha, b, n);
    for (int i = 0; i <= n; i += 400) {
      const double x = b * i / n;
      INFO("lambda=" << lam << " alpha=" << alpha << " b=" << b << " x=" << x);
      CHECK(fh(lam, alpha, x, b) == Approx(f[i]).epsilon(1e-5));
    }
  }
}

TEST_CASE("f_hat domain") {
  const double v = big_v(-1.0, {1.0, 0.0}).value;
  CHECK_THROWS_AS(f_hat(query(v, -1.0), 0.0), DomainError);
  CHECK_THROWS_AS(f_hat(query(v - 0.1, -1.0), 0.0), DomainError);
  CHECK_NOTHROW(f_hat(query(v + 1e-6, -1.0), 0.0));
  CHECK_THROWS_AS(f_hat(query(1.0, -1.0), 1.5), DomainError);
  CHECK_THROWS_AS(f_hat(query(1.0, -1.0), -0.1), DomainError);
  CHECK_THROWS_AS(f_hat(query(0.5, 1.0), 0.0), DomainError);
}

TEST_CASE("removable singularity at lambda = 0") {
  for (double b : {0.5, 1.0, 3.0}) {
    for (double alpha : {-0.3, -1.0, -4.0}) {
      for (double x : {0.0, 0.4 * b, b}) {
        const MgfValue at0 = f_hat(query(0.0, alpha, b), x);
        CHECK_FALSE(at0.stable_form_used);
        CHECK(at0.value == Approx(-2 * b / alpha + x * (2 * b - x)).epsilon(1e-14));
        const double edge = 1e-6 * std::max(1.0, 1.0 / (b * b));
        for (double s : {-1.0, 1.0}) {
          const MgfValue in = f_hat(query(s * edge * (1 - 1e-6), alpha, b), x);
          const MgfValue out = f_hat(query(s * edge * (1 + 1e-6), alpha, b), x);
          CHECK_FALSE(in.stable_form_used);
          CHECK(out.stable_form_used);
          CHECK(in.value == Approx(out.value).epsilon(1e-8));
        }
      }
    }
  }
}

TEST_CASE("hitting_laplace") {
  const ReflectionParams p{1.0, 0.0};
  CHECK(hitting_laplace(p, 0.5, 0.0) == 1.0);
  CHECK(hitting_laplace(p, 3.0, 0.0) == 1.0);
  CHECK(hitting_laplace(p, 0.5, 1.0) == Approx(0.64805427366388539957).epsilon(1e-14));
  for (double lam : {0.01, 0.5, 4.0, 1e4}) {
    double prev = 1.0;
    for (int i = 1; i <= 50; ++i) {
      const double h = hitting_laplace(p, lam, i / 50.0);
      CHECK(h < prev);
      CHECK(h > 0.0);
      prev = h;
    }
  }
  CHECK_THROWS_AS(hitting_laplace(p, 0.0, 0.5), DomainError);
  CHECK_THROWS_AS(hitting_laplace(p, -1.0, 0.5), DomainError);
  CHECK_THROWS_AS(hitting_laplace(p, 1.0, 1.1), DomainError);
}

TEST_CASE("boundary identity through the hitting time of 0") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double b = 0.1 + 4.9 * u(gen);
    const double lam = 1e-3 + 30 * u(gen);
    const double alpha = -10 + 10 * u(gen);
    const double x = b * u(gen);
    const double lhs = fh(lam, alpha, x, b) - 1 / lam;
    const double rhs = hitting_laplace({b, 0.0}, lam, x) * (fh(lam, alpha, 0.0, b) - 1 / lam);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs) + 1e-15);
  }
}

TEST_CASE("stable form equals the exponential-sum form") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  while (checked < 1000) {
    const double b = 0.1 + 9.9 * u(gen);
    const double lam = 50.0 * u(gen);
    if (lam <= 0.0 || b * std::sqrt(2 * lam) >= 300) continue;
    const double astar = alpha_star(lam, {b, 0.0});
    const double alpha = astar - (20.0 * u(gen) + 1e-3);
    const double x = b * u(gen);
    const MgfQuery q = query(lam, alpha, b);
    const MgfDecomposition d = f_hat_decomposition(q, x);
    const double stable = f_hat(q, x).value;
    INFO("b=" << b << " lambda=" << lam << " alpha=" << alpha << " x=" << x);
    CHECK(std::abs(d.direct_value - stable) < 1e-9 * std::abs(stable));
    CHECK(d.b == Approx(std::exp(2 * std::sqrt(2 * lam) * b) * d.a).epsilon(1e-12));
    ++checked;
  }
}

TEST_CASE("f_hat_decomposition") {
  const MgfDecomposition zero = f_hat_decomposition(query(0.7, 0.0), 0.3);
  CHECK(zero.a == 0.0);
  CHECK(zero.b == 0.0);
  CHECK(zero.direct_value == Approx(1 / 0.7).epsilon(1e-15));
  CHECK(f_hat_decomposition(query(0.5, -1.0), 0.0).direct_value ==
        Approx(0.86466471676338730811).epsilon(1e-13));
  CHECK(f_hat_decomposition(query(0.5, -1.0), 1.0).direct_value ==
        Approx(1.2642411176571153568).epsilon(1e-13));
  CHECK_THROWS_AS(f_hat_decomposition(query(45001.0, -1.0), 0.0), OverflowError);
  CHECK_NOTHROW(f_hat(query(45001.0, -1.0), 0.0));
  CHECK_THROWS_AS(f_hat_decomposition(query(-0.1, -1.0), 0.0), DomainError);
}

TEST_CASE("f_hat is increasing in alpha and bounded like an MGF") {
  for (double b : {0.5, 1.0, 2.0}) {
    for (double lam : {-0.2 / (b * b), 0.1, 1.0, 10.0}) {
      const double amax = alpha_star(lam, {b, 0.0});
      for (double x : {0.0, 0.5 * b, b}) {
        double prev = 0.0;
        for (int i = 0; i <= 60; ++i) {
          const double alpha = amax - 1e-3 - 12.0 * (60 - i) / 60.0;
          const double v = fh(lam, alpha, x, b);
          CHECK(v > 0.0);
          CHECK(v > prev);
          prev = v;
          if (lam > 0.0) {
            const double m = lam * v;
            if (alpha < 0.0) CHECK((m > 0.0 && m <= 1.0));
            if (alpha > 0.0) CHECK(m >= 1.0);
          }
        }
      }
    }
  }
  CHECK(0.4 * fh(0.4, 0.0, 0.2) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("simple pole at lambda = V(alpha)") {
  for (double alpha : {-2.0, 0.5, 1.5}) {
    const double v = big_v(alpha, {1.0, 0.0}).value;
    std::vector<double> products;
    for (int k = 2; k <= 7; ++k) {
      const double eps = std::pow(10.0, -k);
      products.push_back(fh(v + eps, alpha, 0.0) * eps);
    }
    for (std::size_t i = 1; i < products.size(); ++i) {
      CHECK(products[i] > 0.0);
      CHECK(std::isfinite(products[i]));
      CHECK(std::abs(products[i] - products[i - 1]) <= std::abs(products[i - 1] - products[0]) + 1e-3 * products[i]);
    }
    // residue alpha / (lambda alpha*'(lambda)) at the pole
    const double pole = v != 0.0 ? alpha / (v * alpha_star_prime(v, {1.0, 0.0})) : 0.0;
    CHECK(products.back() == Approx(pole).epsilon(1e-4));
  }
}

TEST_CASE("ode residuals") {
  const OdeResidual flat = ode_residual(query(2.0, 0.0), 64);
  CHECK(flat.interior < 1e-12);
  CHECK(flat.lower < 1e-12);
  CHECK(flat.upper < 1e-12);

  const OdeResidual r64 = ode_residual(query(0.5, -1.0), 64);
  const OdeResidual r128 = ode_residual(query(0.5, -1.0), 128);
  CHECK(r64.interior < 1e-3);
  CHECK(r64.interior / r128.interior == Approx(4.0).epsilon(0.1));

  const OdeResidual pos = ode_residual(query(2.0, 1.0), 128);
  CHECK(pos.lower < 1e-3);
  CHECK(pos.upper < 1e-3);
  CHECK(pos.max() == std::max({pos.interior, pos.lower, pos.upper}));

  CHECK_THROWS_AS(ode_residual(query(2.0, 1.0), 15), ConfigError);
  CHECK_THROWS_AS(ode_residual(query(0.5, 1.0), 64), DomainError);
}

TEST_CASE("ode residuals converge at second order") {
  for (auto [alpha, lam] : std::vector<std::pair<double, double>>{{-1, 0.5}, {1, 2}, {-3, 1}}) {
    OdeResidual prev = ode_residual(query(lam, alpha), 64);
    for (int n = 128; n <= 512; n *= 2) {
      const OdeResidual cur = ode_residual(query(lam, alpha), n);
      INFO("alpha=" << alpha << " lambda=" << lam << " n=" << n);
      CHECK(prev.interior / cur.interior >= 3.5);
      CHECK(prev.interior / cur.interior <= 4.5);
      CHECK(prev.lower / cur.lower >= 3.5);
      CHECK(prev.lower / cur.lower <= 4.5);
      // f''' vanishes at b, so the one-sided derivative there gains an order
      CHECK(prev.upper / cur.upper == Approx(8.0).epsilon(0.05));
      CHECK(prev.max() / cur.max() >= 3.5);
      CHECK(prev.max() / cur.max() <= 4.5);
      prev = cur;
    }
    CHECK(prev.max() < 2e-5);
  }
}
