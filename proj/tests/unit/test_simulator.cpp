#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "rlt/errors.hpp"
#include "rlt/mgf.hpp"
#include "rlt/simulator.hpp"

using namespace rlt;
using doctest::Approx;

namespace {

SimConfig config(double b, double x, double horizon, double dt, std::uint64_t n,
                 std::uint64_t seed = 1, Scheme scheme = Scheme::Bridge) {
  SimConfig c;
  c.params = {b, x};
  c.horizon = horizon;
  c.dt = dt;
  c.n_paths = n;
  c.seed = seed;
  c.scheme = scheme;
  return c;
}

void check_path_invariants(const PathSample& p, double b, double x0) {
  REQUIRE(!p.t.empty());
  CHECK(p.t.front() == 0.0);
  CHECK(p.l.front() == 0.0);
  CHECK(p.u.front() == 0.0);
  CHECK(p.x.front() == x0);
  for (std::size_t k = 0; k < p.t.size(); ++k) {
    CHECK(p.x[k] >= 0.0);
    CHECK(p.x[k] <= b);
    const double scale = std::abs(x0) + std::abs(p.w[k]) + p.l[k] + p.u[k] + 1.0;
    CHECK(std::abs(p.x[k] - x0 - p.w[k] - p.l[k] + p.u[k]) <= 1e-12 * scale);
    if (k > 0) {
      CHECK(p.t[k] > p.t[k - 1]);
      CHECK(p.l[k] >= p.l[k - 1]);
      CHECK(p.u[k] >= p.u[k - 1]);
    }
  }
}

// E of the clamp local time at 0 after n Gaussian steps of size dt:
// E max(0, max_k -S_k) = sum_k E[S_k^+] / k (Spitzer).
double spitzer_mean(double dt, double horizon) {
  const auto n = static_cast<long>(std::llround(horizon / dt));
  double s = 0.0;
  for (long k = n; k >= 1; --k) s += 1.0 / std::sqrt(static_cast<double>(k));
  return std::sqrt(dt / (2 * std::numbers::pi)) * s;
}

}  // namespace

TEST_CASE("SimConfig validation") {
  CHECK_NOTHROW(config(1, 0, 1, 1e-3, 10).validate());
  CHECK_THROWS_AS(config(1, 0, 1, 0.0, 10).validate(), ConfigError);
  CHECK_THROWS_AS(config(1, 0, 1, -1e-3, 10).validate(), ConfigError);
  CHECK_THROWS_AS(config(1, 0, 0.0, 1e-3, 10).validate(), ConfigError);
  CHECK_THROWS_AS(config(1, 0, 1e-3, 1e-2, 10).validate(), ConfigError);
  CHECK_THROWS_AS(config(1, 0, 1e4, 1e-6, 10).validate(), ConfigError);
  CHECK_THROWS_AS(config(1, 0, 1, 1e-3, 0).validate(), ConfigError);
  CHECK_THROWS_AS(config(1, 2, 1, 1e-3, 10).validate(), ConfigError);
  CHECK_THROWS_AS(config(-1, 0, 1, 1e-3, 10).validate(), ConfigError);
  CHECK(config(1, 0, 1, 1e-3, 10).warnings().empty());
  CHECK(config(0.1, 0, 1, 0.01, 10).warnings().size() == 1);
  CHECK(parse_scheme("bridge") == Scheme::Bridge);
  CHECK(parse_scheme("clamp") == Scheme::Clamp);
  CHECK_THROWS_AS(parse_scheme("euler"), ConfigError);
}

TEST_CASE("functionals") {
  CHECK(Functional::parse("exp_tilt_L", 2.0, -1.0).kind == Functional::Kind::ExpTiltL);
  CHECK(Functional::parse("exp_tilt_L", 2.0, -1.0).alpha == -1.0);
  CHECK(Functional::parse("occupation_mean", 2.0, 0.0).name() == "occupation_mean");
  for (const char* n : {"exp_tilt_L", "L_over_t", "U_over_t", "occupation_mean"}) {
    CHECK(Functional::parse(n, 1.0, 0.0).name() == n);
  }
  CHECK_THROWS_AS(Functional::parse("max_X", 1.0, 0.0), UnknownFunctional);
  CHECK_THROWS_AS(mc_functional(config(1, 0, 1, 1e-2, 10), Functional::l_over_t(2.0)), ConfigError);
  CHECK_THROWS_AS(mc_functional(config(1, 0, 1, 1e-2, 10), Functional::l_over_t(0.0)), ConfigError);
}

TEST_CASE("pathwise invariants") {
  for (Scheme scheme : {Scheme::Bridge, Scheme::Clamp}) {
    for (double b : {0.3, 1.0, 2.0}) {
      for (double x : {0.0, 0.5 * b, b}) {
        const SimConfig cfg = config(b, x, 2.0, 1e-3, 20, 9, scheme);
        for (std::uint64_t i = 0; i < 20; ++i) {
          check_path_invariants(simulate_path(cfg, i), b, x);
        }
      }
    }
  }
}

TEST_CASE("time grid with a partial final step") {
  const PathSample p = simulate_path(config(1, 0.2, 1.05, 0.1, 1), 0);
  REQUIRE(p.t.size() == 12);
  CHECK(grid_points(1.05, 0.1) == 12);
  CHECK(grid_points(1.0, 0.1) == 11);
  for (int k = 0; k <= 10; ++k) CHECK(p.t[k] == Approx(0.1 * k).epsilon(1e-15));
  CHECK(p.t.back() == 1.05);

  SimConfig ends = config(1, 0.2, 1.05, 0.1, 1);
  ends.store_full_paths = false;
  const PathSample e = simulate_path(ends, 0);
  REQUIRE(e.t.size() == 2);
  CHECK(e.t.back() == 1.05);
  CHECK(e.x.back() == p.x.back());
  CHECK(e.l.back() == p.l.back());
  CHECK(e.u.back() == p.u.back());
}

TEST_CASE("no boundary contact keeps the regulators at zero") {
  for (Scheme scheme : {Scheme::Bridge, Scheme::Clamp}) {
    const SimConfig cfg = config(1.0, 0.5, 0.0025, 1e-4, 200, 3, scheme);
    for (std::uint64_t i = 0; i < 200; ++i) {
      const PathSample p = simulate_path(cfg, i);
      const auto [mn, mx] = std::minmax_element(p.x.begin(), p.x.end());
      if (*mn > 0.05 && *mx < 0.95) {
        CHECK(p.l.back() == 0.0);
        CHECK(p.u.back() == 0.0);
      }
    }
  }
}

TEST_CASE("paths are reproducible in isolation") {
  const SimConfig a = config(1.0, 0.3, 1.0, 1e-3, 100, 42);
  SimConfig b = a;
  b.n_paths = 8;
  b.threads = 3;
  const PathSample p1 = simulate_path(a, 7);
  const PathSample p2 = simulate_path(a, 7);
  const PathSample p3 = simulate_path(b, 7);
  CHECK(p1.x == p2.x);
  CHECK(p1.l == p2.l);
  CHECK(p1.u == p2.u);
  CHECK(p1.x == p3.x);
  CHECK(p1.l == p3.l);
  CHECK(simulate_path(a, 6).x != p1.x);
  SimConfig other = a;
  other.seed = 43;
  CHECK(simulate_path(other, 7).x != p1.x);
  CHECK_THROWS_AS(simulate_path(a, 100), ConfigError);
}

TEST_CASE("discrete complementarity") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double b = 1.0, h = 1e-2;

  SUBCASE("clamp: pushes only from the barrier") {
    double x = 0.1;
    auto never = [] { FAIL("clamp scheme must not sample the bridge"); return 0.5; };
    int lower = 0, upper = 0;
    for (int k = 0; k < 100000; ++k) {
      const double dw = std::sqrt(h) * normal(gen);
      ReflectedState s{x, 0, 0, 0};
      reflect_step(s, b, Scheme::Clamp, h, dw, never, never);
      if (s.l > 0.0) {
        ++lower;
        CHECK((x + dw) + s.l == 0.0);
      }
      if (s.u > 0.0) {
        ++upper;
        CHECK(s.x == Approx(b).epsilon(1e-15));
      }
      if (s.l == 0.0 && s.u == 0.0) CHECK(s.x == x + dw);
      x = s.x;
    }
    CHECK(lower > 100);
    CHECK(upper > 100);
  }

  SUBCASE("bridge: pushes only after an extremum sample") {
    ReflectedState s{0.1, 0, 0, 0};
    int lower_calls = 0, upper_calls = 0, lower = 0, interior_push = 0;
    for (int k = 0; k < 100000; ++k) {
      const double l0 = s.l, u0 = s.u, x0 = s.x;
      const int lc = lower_calls, uc = upper_calls;
      const double dw = std::sqrt(h) * normal(gen);
      reflect_step(
          s, b, Scheme::Bridge, h, dw, [&] { ++lower_calls; return 1.0 - unif(gen); },
          [&] { ++upper_calls; return 1.0 - unif(gen); });
      if (s.l > l0) {
        ++lower;
        CHECK(lower_calls > lc);
        if (x0 + dw > 0.0) ++interior_push;
      }
      if (s.u > u0) CHECK(upper_calls > uc);
    }
    CHECK(lower > 100);
    // contact inside a step whose endpoint stayed interior
    CHECK(interior_push > 10);
  }
}

TEST_CASE("mirrored noise swaps the regulators") {
  std::mt19937_64 gen(23);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Scheme scheme : {Scheme::Bridge, Scheme::Clamp}) {
    const double b = 1.0, h = 1e-4, x = 0.3;
    ReflectedState s{x, 0, 0, 0};
    ReflectedState m{b - x, 0, 0, 0};
    for (int k = 0; k < 200000; ++k) {
      const double dw = std::sqrt(h) * normal(gen);
      const double va = 1.0 - unif(gen), vb = 1.0 - unif(gen);
      reflect_step(s, b, scheme, h, dw, [&] { return va; }, [&] { return vb; });
      reflect_step(m, b, scheme, h, -dw, [&] { return vb; }, [&] { return va; });
    }
    INFO("scheme=" << to_string(scheme));
    CHECK(s.l > 1.0);
    CHECK(s.u > 1.0);
    CHECK(m.l == Approx(s.u).epsilon(1e-9));
    CHECK(m.u == Approx(s.l).epsilon(1e-9));
    CHECK(m.x == Approx(b - s.x).epsilon(1e-9));
  }
}

TEST_CASE("estimates are bit-identical across thread counts") {
  for (auto f : {Functional::exp_tilt_l(-1.0, 1.0), Functional::occupation_mean(0.7)}) {
    SimConfig cfg = config(1.0, 0.25, 1.0, 1e-3, 1000, 77);
    cfg.threads = 1;
    const McEstimate ref = mc_functional(cfg, f);
    for (unsigned th : {2u, 3u, 8u}) {
      cfg.threads = th;
      const McEstimate e = mc_functional(cfg, f);
      CHECK(e.mean == ref.mean);
      CHECK(e.std_error == ref.std_error);
      CHECK(e.n_paths == 1000);
      CHECK(e.seed == 77);
    }
  }
}

TEST_CASE("Moments merge matches a single pass") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(2.0, 3.0);
  std::vector<double> xs(1000);
  for (auto& v : xs) v = normal(gen);
  Moments all, left, right;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    all.add(xs[i]);
    (i < 377 ? left : right).add(xs[i]);
  }
  left.merge(right);
  CHECK(left.n == all.n);
  CHECK(left.mean == Approx(all.mean).epsilon(1e-13));
  CHECK(left.variance() == Approx(all.variance()).epsilon(1e-12));
  double mean = 0.0;
  for (double v : xs) mean += v / xs.size();
  double var = 0.0;
  for (double v : xs) var += (v - mean) * (v - mean) / (xs.size() - 1);
  CHECK(all.variance() == Approx(var).epsilon(1e-12));
  Moments empty;
  empty.merge(all);
  CHECK(empty.mean == all.mean);
}

TEST_CASE("path CSV") {
  std::ostringstream os;
  write_path_csv(os, simulate_path(config(1.0, 0.5, 0.003, 1e-3, 1), 0));
  const std::string s = os.str();
  CHECK(s.rfind("t,X,L,U\n", 0) == 0);
  CHECK(s.find('\r') == std::string::npos);
  CHECK(std::count(s.begin(), s.end(), '\n') == 5);
  CHECK(s.find("\n0,0.5,0,0\n") != std::string::npos);
  CHECK(s.find("0.001,") != std::string::npos);
}

TEST_CASE("exponential horizon") {
  const SimConfig cfg = config(1.0, 0.0, 1.0, 1e-3, 100000, 5);
  Moments tau;
  for (std::uint64_t i = 0; i < cfg.n_paths; ++i) tau.add(draw_exp_horizon(cfg, 2.5, i));
  CHECK(std::abs(tau.mean - 0.4) < 3 * tau.std_error());

  SimConfig coarse = cfg;
  coarse.dt = 1e-2;
  coarse.n_paths = 10;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const double t = draw_exp_horizon(cfg, 2.5, i);
    CHECK(draw_exp_horizon(coarse, 2.5, i) == t);
    const PathSample p = sample_exp_horizon(coarse, 2.5, i);
    CHECK(p.t.back() == t);
    check_path_invariants(p, 1.0, 0.0);
  }
  CHECK_THROWS_AS(draw_exp_horizon(cfg, 0.0, 0), ConfigError);
}

TEST_SUITE("statistical") {

TEST_CASE("exp(alpha L_tau) against lambda f_hat") {
  for (double alpha : {-0.5, -1.0, -2.0}) {
    for (double lam : {0.5, 2.0}) {
      SimConfig cfg = config(1.0, 0.0, 1.0, 1e-3, 20000, 101);
      cfg.store_full_paths = false;
      Moments m, one;
      for (std::uint64_t i = 0; i < cfg.n_paths; ++i) {
        const double l = sample_exp_horizon(cfg, lam, i).l.back();
        m.add(std::exp(alpha * l));
        one.add(std::exp(0.0 * l));
      }
      const double target = lam * f_hat({{1.0, 0.0}, lam, alpha}, 0.0).value;
      INFO("alpha=" << alpha << " lambda=" << lam << " mean=" << m.mean << " se=" << m.std_error());
      CHECK(std::abs(m.mean - target) < 3 * m.std_error());
      CHECK(one.mean == 1.0);
    }
  }
}

TEST_CASE("ergodic means at t = 200") {
  const SimConfig cfg = config(1.0, 0.5, 200.0, 1e-2, 4000, 8);
  const McEstimate l = mc_functional(cfg, Functional::l_over_t(200.0));
  const McEstimate u = mc_functional(cfg, Functional::u_over_t(200.0));
  const McEstimate occ = mc_functional(cfg, Functional::occupation_mean(200.0));
  CHECK(std::abs(l.mean - 0.5) < 3 * l.std_error);
  CHECK(std::abs(u.mean - 0.5) < 3 * u.std_error);
  CHECK(std::abs(occ.mean - 0.5) < 3 * occ.std_error);
}

TEST_CASE("one-sided local time follows |N(0, t)|") {
  SimConfig cfg = config(1e6, 0.0, 1.0, 1e-3, 20000, 4);
  cfg.store_full_paths = false;
  std::vector<double> ls;
  Moments tilt;
  for (std::uint64_t i = 0; i < cfg.n_paths; ++i) {
    ls.push_back(simulate_path(cfg, i).l.back());
    tilt.add(std::exp(-ls.back()));
  }
  CHECK(oracle::ks_half_normal(ls, 1.0) < 0.02);
  CHECK(std::abs(tilt.mean - oracle::one_sided_tilt()) < 3 * tilt.std_error());
}

TEST_CASE("clamp local time matches the random-walk maximum") {
  SimConfig cfg = config(1e6, 0.0, 1.0, 1e-3, 100000, 12, Scheme::Clamp);
  const std::vector<double> dts{1e-2, 1e-3, 1e-4};
  const auto rows = convergence_study(cfg, dts, Functional::l_over_t(1.0));
  REQUIRE(rows.size() == 3);
  std::vector<double> exact;
  for (const auto& r : rows) {
    exact.push_back(spitzer_mean(r.dt, 1.0));
    INFO("dt=" << r.dt << " est=" << r.estimate << " exact=" << exact.back());
    CHECK(std::abs(r.estimate - exact.back()) < 3 * r.std_error);
  }
  // bias ~ zeta(1/2) sqrt(dt / 2 pi): differences shrink by sqrt(10) per decade
  CHECK((exact[1] - exact[0]) / (exact[2] - exact[1]) == Approx(std::sqrt(10.0)).epsilon(0.03));
  const double measured = (rows[1].estimate - rows[0].estimate) / (rows[2].estimate - rows[1].estimate);
  CHECK(measured > 2.0);
  CHECK(measured < 5.0);
  CHECK(rows[0].estimate < rows[1].estimate);
  CHECK(rows[1].estimate < rows[2].estimate);
}

TEST_CASE("clamp tilt approaches the one-sided value from above") {
  SimConfig cfg = config(1e6, 0.0, 1.0, 1e-3, 100000, 13, Scheme::Clamp);
  const std::vector<double> dts{1e-2, 1e-3, 1e-4};
  const auto rows = convergence_study(cfg, dts, Functional::exp_tilt_l(-1.0, 1.0));
  const double exact = oracle::one_sided_tilt();
  CHECK(rows[0].estimate > rows[1].estimate);
  CHECK(rows[1].estimate > rows[2].estimate);
  CHECK(rows[2].estimate > exact - 3 * rows[2].std_error);
  CHECK(rows[0].estimate - exact > rows[1].estimate - exact);
  const auto again = convergence_study(cfg, dts, Functional::exp_tilt_l(-1.0, 1.0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].estimate == rows[i].estimate);
    CHECK(again[i].std_error == rows[i].std_error);
  }
  const std::vector<double> bad{1e-3, 1e-2};
  CHECK_THROWS_AS(convergence_study(cfg, bad, Functional::l_over_t(1.0)), ConfigError);
}

}
