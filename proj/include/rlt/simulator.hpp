#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iosfwd>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rlt/core_math.hpp"
#include "rlt/rng.hpp"

namespace rlt {

/// How the regulators are updated over one time step.
enum class Scheme {
  /// Samples the extremum of the Brownian bridge between the step endpoints,
  /// so L and U follow the continuous Skorokhod map whenever a step touches
  /// at most one barrier.
  Bridge,
  /// Clamps only the step endpoint: dL = max(0, -Y), dU = max(0, Y' - b).
  /// Underestimates local time by O(sqrt(dt)).
  Clamp,
};

const char* to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

struct SimConfig {
  ReflectionParams params;
  double horizon = 1.0;
  double dt = 1e-3;
  std::uint64_t n_paths = 1000;
  std::uint64_t seed = 0;
  bool store_full_paths = true;
  Scheme scheme = Scheme::Bridge;
  /// Worker threads; 0 uses std::thread::hardware_concurrency(). Results do
  /// not depend on this value.
  unsigned threads = 0;

  /// Throws ConfigError on invalid fields.
  void validate() const;
  /// Soft problems, e.g. dt > b^2 / 4.
  std::vector<std::string> warnings() const;
};

/// Trajectory on a uniform grid; the final step may be shorter than dt.
/// `w` holds the accumulated raw Gaussian increments.
struct PathSample {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> l;
  std::vector<double> u;
  std::vector<double> w;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t seed = 0;
};

/// Scalar functionals of a path on [0, t].
struct Functional {
  enum class Kind { ExpTiltL, LOverT, UOverT, OccupationMean };
  Kind kind = Kind::LOverT;
  double t = 1.0;
  /// Tilt for ExpTiltL: exp(alpha L_t).
  double alpha = 0.0;

  static Functional exp_tilt_l(double alpha, double t) { return {Kind::ExpTiltL, t, alpha}; }
  static Functional l_over_t(double t) { return {Kind::LOverT, t, 0.0}; }
  static Functional u_over_t(double t) { return {Kind::UOverT, t, 0.0}; }
  static Functional occupation_mean(double t) { return {Kind::OccupationMean, t, 0.0}; }
  /// Accepts exp_tilt_L, L_over_t, U_over_t, occupation_mean.
  static Functional parse(const std::string& name, double t, double alpha);
  std::string name() const;
};

// ---------------------------------------------------------------------------
// Single-step reflection
// ---------------------------------------------------------------------------

struct ReflectedState {
  double x = 0.0;
  double l = 0.0;
  double u = 0.0;
  double w = 0.0;
};

namespace detail {

// Minimum of a Brownian bridge from a to c over a step of length h, sampled
// by inversion with uniform v in (0, 1].
inline double bridge_min(double a, double c, double h, double v) {
  const double d = c - a;
  return 0.5 * (a + c - std::sqrt(d * d - 2.0 * h * std::log(v)));
}

// Push needed to keep a path from a to c (distances to the barrier) above 0.
// The bridge is only sampled when a touch has probability above exp(-40).
template <class Uniform>
double barrier_push(Scheme scheme, double a, double c, double h, Uniform&& uniform) {
  if (scheme == Scheme::Clamp) return c < 0.0 ? -c : 0.0;
  if (c > 0.0 && a * c >= 20.0 * h) return 0.0;
  const double m = bridge_min(a, c, h, uniform());
  return m < 0.0 ? -m : 0.0;
}

}  // namespace detail

/// Advances `s` by one step of length h with Gaussian increment dw. Lower
/// barrier first, then upper. `lower_uniform` and `upper_uniform` are called
/// only when the bridge scheme needs an extremum sample.
template <class LowerUniform, class UpperUniform>
void reflect_step(ReflectedState& s, double b, Scheme scheme, double h, double dw,
                  LowerUniform&& lower_uniform, UpperUniform&& upper_uniform) {
  const double y = s.x + dw;
  const double dl = detail::barrier_push(scheme, s.x, y, h, lower_uniform);
  const double y1 = y + dl;
  const double du = detail::barrier_push(scheme, b - s.x, b - y1, h, upper_uniform);
  double next = y1 - du;
  double extra = 0.0;
  if (next < 0.0) {
    // Both barriers inside one step; only reachable when dt is not << b^2.
    extra = -next;
    next = 0.0;
  }
  s.x = next;
  s.l += dl + extra;
  s.u += du;
  s.w += dw;
}

/// Runs path `path_index` of `cfg` up to `horizon`, calling
/// obs(k, t, state) at every grid point, k = 0 included. The last step is
/// shortened so the final grid time equals `horizon`.
template <class Observer>
void run_path(const SimConfig& cfg, std::uint64_t path_index, double horizon,
              Observer&& obs) {
  PathRng rng(cfg.seed, path_index, Substream::Increments);
  auto uniform = [&rng] { return rng.uniform_open0(); };
  const double b = cfg.params.b;
  const double dt = cfg.dt;
  const double sqrt_dt = std::sqrt(dt);
  const auto n_full = static_cast<std::uint64_t>(std::floor(horizon / dt * (1.0 + 1e-12)));
  const double rem = horizon - static_cast<double>(n_full) * dt;

  ReflectedState s{cfg.params.x, 0.0, 0.0, 0.0};
  obs(std::uint64_t{0}, 0.0, s);
  for (std::uint64_t k = 1; k <= n_full; ++k) {
    reflect_step(s, b, cfg.scheme, dt, sqrt_dt * rng.normal(), uniform, uniform);
    obs(k, static_cast<double>(k) * dt, s);
  }
  if (rem > 1e-9 * dt) {
    reflect_step(s, b, cfg.scheme, rem, std::sqrt(rem) * rng.normal(), uniform, uniform);
    obs(n_full + 1, horizon, s);
  }
}

/// Number of grid points run_path visits for `horizon`, k = 0 included.
std::uint64_t grid_points(double horizon, double dt);

/// Full trajectory of one path over cfg.horizon. With store_full_paths off
/// only the first and last grid points are kept.
PathSample simulate_path(const SimConfig& cfg, std::uint64_t path_index);

/// Exponential horizon tau ~ Exp(rate) drawn from its own substream.
double draw_exp_horizon(const SimConfig& cfg, double rate, std::uint64_t path_index);

/// Path of `path_index` on [0, tau] with tau ~ Exp(rate).
PathSample sample_exp_horizon(const SimConfig& cfg, double rate, std::uint64_t path_index);

// ---------------------------------------------------------------------------
// Parallel Monte-Carlo reduction
// ---------------------------------------------------------------------------

/// Running count, mean and sum of squared deviations.
struct Moments {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  void merge(const Moments& o);
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

inline constexpr std::uint64_t kPathsPerChunk = 256;

unsigned resolve_threads(unsigned requested);

/// Evaluates fn(path_index, out) for every path, where `out` has n_out
/// entries, and returns per-entry moments. Paths are grouped in fixed chunks
/// of kPathsPerChunk whose partial moments are merged in chunk order, so the
/// result is bit-identical for any thread count.
template <class PathFn>
std::vector<Moments> reduce_paths(const SimConfig& cfg, std::size_t n_out, PathFn&& fn) {
  const std::uint64_t n_chunks = (cfg.n_paths + kPathsPerChunk - 1) / kPathsPerChunk;
  std::vector<std::vector<Moments>> partial(n_chunks, std::vector<Moments>(n_out));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    std::vector<double> out(n_out);
    try {
      for (std::uint64_t c = next++; c < n_chunks && !failed; c = next++) {
        const std::uint64_t end = std::min(cfg.n_paths, (c + 1) * kPathsPerChunk);
        for (std::uint64_t p = c * kPathsPerChunk; p < end; ++p) {
          fn(p, std::span<double>(out));
          for (std::size_t j = 0; j < n_out; ++j) partial[c][j].add(out[j]);
        }
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(cfg.threads), n_chunks));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Moments> total(n_out);
  for (const auto& chunk : partial) {
    for (std::size_t j = 0; j < n_out; ++j) total[j].merge(chunk[j]);
  }
  return total;
}

McEstimate to_estimate(const Moments& m, std::uint64_t seed);

/// Monte-Carlo mean and standard error of `f` over cfg.n_paths paths.
McEstimate mc_functional(const SimConfig& cfg, const Functional& f);

struct ConvergenceRow {
  double dt = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
};

/// mc_functional at each dt (strictly decreasing) with the same seed.
std::vector<ConvergenceRow> convergence_study(const SimConfig& cfg,
                                              std::span<const double> dts,
                                              const Functional& f);

/// Writes `t,X,L,U` rows with 17 significant digits.
void write_path_csv(std::ostream& os, const PathSample& path);

}  // namespace rlt
