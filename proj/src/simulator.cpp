#include "rlt/simulator.hpp"

#include <ostream>
#include <string>

#include "rlt/errors.hpp"
#include "rlt/format.hpp"

namespace rlt {

const char* to_string(Scheme s) { return s == Scheme::Bridge ? "bridge" : "clamp"; }

Scheme parse_scheme(const std::string& name) {
  if (name == "bridge") return Scheme::Bridge;
  if (name == "clamp") return Scheme::Clamp;
  throw ConfigError("unknown scheme '" + name + "' (expected bridge or clamp)");
}

void SimConfig::validate() const {
  try {
    params.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (dt > horizon) throw ConfigError("dt must not exceed the horizon");
  if (horizon / dt > 1e9) throw ConfigError("horizon / dt exceeds 1e9 steps");
  if (n_paths == 0) throw ConfigError("n_paths must be positive");
}

std::vector<std::string> SimConfig::warnings() const {
  std::vector<std::string> out;
  if (dt > params.b * params.b / 4.0) {
    out.push_back("dt = " + fmt17(dt) + " exceeds b^2/4; barrier contacts are poorly resolved");
  }
  return out;
}

Functional Functional::parse(const std::string& name, double t, double alpha) {
  if (name == "exp_tilt_L") return exp_tilt_l(alpha, t);
  if (name == "L_over_t") return l_over_t(t);
  if (name == "U_over_t") return u_over_t(t);
  if (name == "occupation_mean") return occupation_mean(t);
  throw UnknownFunctional("unknown functional '" + name + "'");
}

std::string Functional::name() const {
  switch (kind) {
    case Kind::ExpTiltL:
      return "exp_tilt_L";
    case Kind::LOverT:
      return "L_over_t";
    case Kind::UOverT:
      return "U_over_t";
    case Kind::OccupationMean:
      return "occupation_mean";
  }
  return "?";
}

std::uint64_t grid_points(double horizon, double dt) {
  const auto n_full = static_cast<std::uint64_t>(std::floor(horizon / dt * (1.0 + 1e-12)));
  const double rem = horizon - static_cast<double>(n_full) * dt;
  return n_full + 1 + (rem > 1e-9 * dt ? 1 : 0);
}

namespace {

PathSample record(const SimConfig& cfg, std::uint64_t path_index, double horizon) {
  PathSample out;
  const std::uint64_t n = grid_points(horizon, cfg.dt);
  const std::size_t keep = cfg.store_full_paths ? n : 2;
  out.t.reserve(keep);
  out.x.reserve(keep);
  out.l.reserve(keep);
  out.u.reserve(keep);
  out.w.reserve(keep);
  run_path(cfg, path_index, horizon, [&](std::uint64_t k, double t, const ReflectedState& s) {
    if (!cfg.store_full_paths && k != 0 && k + 1 != n) return;
    out.t.push_back(t);
    out.x.push_back(s.x);
    out.l.push_back(s.l);
    out.u.push_back(s.u);
    out.w.push_back(s.w);
  });
  return out;
}

void check_path_index(const SimConfig& cfg, std::uint64_t path_index) {
  if (path_index >= cfg.n_paths) {
    throw ConfigError("path_index " + std::to_string(path_index) + " >= n_paths");
  }
}

}  // namespace

PathSample simulate_path(const SimConfig& cfg, std::uint64_t path_index) {
  cfg.validate();
  check_path_index(cfg, path_index);
  return record(cfg, path_index, cfg.horizon);
}

double draw_exp_horizon(const SimConfig& cfg, double rate, std::uint64_t path_index) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("rate must be positive");
  PathRng rng(cfg.seed, path_index, Substream::Horizon);
  return rng.exponential(rate);
}

PathSample sample_exp_horizon(const SimConfig& cfg, double rate, std::uint64_t path_index) {
  cfg.validate();
  check_path_index(cfg, path_index);
  const double tau = draw_exp_horizon(cfg, rate, path_index);
  if (tau / cfg.dt > 1e9) throw ConfigError("exponential horizon needs more than 1e9 steps");
  return record(cfg, path_index, tau);
}

void Moments::merge(const Moments& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n);
  const double nb = static_cast<double>(o.n);
  const double nt = na + nb;
  const double d = o.mean - mean;
  mean += d * nb / nt;
  m2 += o.m2 + d * d * na * nb / nt;
  n += o.n;
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

McEstimate to_estimate(const Moments& m, std::uint64_t seed) {
  return {m.mean, m.std_error(), m.n, seed};
}

McEstimate mc_functional(const SimConfig& cfg, const Functional& f) {
  cfg.validate();
  if (!(f.t > 0.0) || f.t > cfg.horizon * (1.0 + 1e-12)) {
    throw ConfigError("functional time t must lie in (0, horizon]");
  }
  const double t = std::min(f.t, cfg.horizon);
  auto per_path = [&](std::uint64_t p, std::span<double> out) {
    double area = 0.0;
    double prev_t = 0.0;
    double prev_x = cfg.params.x;
    ReflectedState last;
    run_path(cfg, p, t, [&](std::uint64_t k, double tk, const ReflectedState& s) {
      if (k > 0) area += 0.5 * (tk - prev_t) * (s.x + prev_x);
      prev_t = tk;
      prev_x = s.x;
      last = s;
    });
    switch (f.kind) {
      case Functional::Kind::ExpTiltL:
        out[0] = std::exp(f.alpha * last.l);
        break;
      case Functional::Kind::LOverT:
        out[0] = last.l / t;
        break;
      case Functional::Kind::UOverT:
        out[0] = last.u / t;
        break;
      case Functional::Kind::OccupationMean:
        out[0] = area / t;
        break;
    }
  };
  return to_estimate(reduce_paths(cfg, 1, per_path)[0], cfg.seed);
}

std::vector<ConvergenceRow> convergence_study(const SimConfig& cfg,
                                              std::span<const double> dts,
                                              const Functional& f) {
  if (dts.empty()) throw ConfigError("convergence_study needs at least one dt");
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (!(dts[i] > 0.0)) throw ConfigError("dt values must be positive");
    if (i > 0 && !(dts[i] < dts[i - 1])) throw ConfigError("dt values must decrease");
  }
  std::vector<ConvergenceRow> rows;
  for (double dt : dts) {
    SimConfig c = cfg;
    c.dt = dt;
    const McEstimate e = mc_functional(c, f);
    rows.push_back({dt, e.mean, e.std_error});
  }
  return rows;
}

void write_path_csv(std::ostream& os, const PathSample& path) {
  os << "t,X,L,U\n";
  for (std::size_t i = 0; i < path.t.size(); ++i) {
    os << fmt17(path.t[i]) << ',' << fmt17(path.x[i]) << ',' << fmt17(path.l[i]) << ','
       << fmt17(path.u[i]) << '\n';
  }
}

}  // namespace rlt
