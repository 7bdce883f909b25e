// rlt: closed-form rates and Monte-Carlo verification for the boundary local
// time of Brownian motion reflected on [0, b].
//
// Exit codes: 0 success, 1 verification failure, 2 usage or domain error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rlt/core_math.hpp"
#include "rlt/errors.hpp"
#include "rlt/experiments.hpp"
#include "rlt/format.hpp"
#include "rlt/mgf.hpp"
#include "rlt/simulator.hpp"

namespace fs = std::filesystem;
using namespace rlt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct Grid {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;

  std::vector<double> values() const {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
      out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    }
    return out;
  }
  std::string str() const { return fmt17(lo) + ":" + fmt17(hi) + ":" + std::to_string(count); }
};

Grid parse_grid(const std::string& text) {
  std::stringstream ss(text);
  std::string lo, hi, count;
  if (!std::getline(ss, lo, ':') || !std::getline(ss, hi, ':') || !std::getline(ss, count) ||
      lo.empty() || hi.empty() || count.empty()) {
    throw ConfigError("grid '" + text + "' is not lo:hi:count");
  }
  Grid g;
  try {
    g.lo = std::stod(lo);
    g.hi = std::stod(hi);
    g.count = std::stoi(count);
  } catch (const std::exception&) {
    throw ConfigError("grid '" + text + "' has a non-numeric field");
  }
  if (g.count < 1) throw ConfigError("grid count must be >= 1");
  if (g.count > 1 && !(g.hi > g.lo)) throw ConfigError("grid needs hi > lo");
  return g;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("list '" + text + "' has a non-numeric entry");
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

// Resolved settings echoed at the top of every output file. Thread count
// and output location are left out so reruns compare byte for byte.
class Header {
 public:
  explicit Header(std::string command) : command_(std::move(command)) {}
  void add(const std::string& key, const std::string& value) { items_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, fmt17(value)); }
  void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }

  void write_comment(std::ostream& os, std::uint64_t seed) const {
    os << "# rlt " << RLT_VERSION << ' ' << command_ << '\n';
    os << "# seed=" << seed << '\n';
    for (const auto& [k, v] : items_) os << "# " << k << '=' << v << '\n';
  }

  ordered_json json(std::uint64_t seed) const {
    ordered_json j;
    j["tool"] = "rlt";
    j["version"] = RLT_VERSION;
    j["command"] = command_;
    j["seed"] = seed;
    ordered_json flags = ordered_json::object();
    for (const auto& [k, v] : items_) flags[k] = v;
    j["flags"] = flags;
    return j;
  }

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> items_;
};

// Stdout when no path is given.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ConfigError("cannot open " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

// Flags shared by most subcommands; std::nullopt means "use the default".
struct Common {
  double b = 1.0;
  std::optional<double> x;
  std::optional<double> alpha;
  std::optional<double> lambda;
  std::optional<double> t;
  std::optional<double> dt;
  std::optional<std::uint64_t> paths;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  unsigned threads = 0;
  std::string scheme = "bridge";
};

void add_b(CLI::App* app, Common& c) {
  app->add_option("--b", c.b, "Barrier width b > 0 [length]")->capture_default_str();
}
void add_x(CLI::App* app, Common& c) {
  app->add_option("--x", c.x, "Start point x in [0, b] [length] (default 0)");
}
void add_alpha(CLI::App* app, Common& c, const std::string& help) {
  app->add_option("--alpha", c.alpha, help);
}
void add_lambda(CLI::App* app, Common& c, const std::string& help) {
  app->add_option("--lambda", c.lambda, help);
}
void add_sim(CLI::App* app, Common& c, const std::string& t_help) {
  app->add_option("--t", c.t, t_help);
  app->add_option("--dt", c.dt, "Time step [time]");
  app->add_option("--paths", c.paths, "Number of Monte-Carlo paths");
  app->add_option("--seed", c.seed, "64-bit RNG seed")->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads, 0 = all cores (does not affect results)")
      ->capture_default_str();
  app->add_option("--scheme", c.scheme, "Step scheme: bridge (exact barrier contact) or clamp")
      ->capture_default_str();
}
void add_out(CLI::App* app, Common& c, const std::string& help) {
  app->add_option("--out", c.out, help);
  app->add_option("--config", c.config, "File of key=value lines; command-line flags win");
}

SimConfig sim_config(const Common& c, double horizon, double default_dt,
                     std::uint64_t default_paths) {
  SimConfig cfg;
  cfg.params = {c.b, c.x.value_or(0.0)};
  cfg.horizon = horizon;
  cfg.dt = c.dt.value_or(default_dt);
  cfg.n_paths = c.paths.value_or(default_paths);
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  cfg.scheme = parse_scheme(c.scheme);
  cfg.store_full_paths = true;
  cfg.validate();
  for (const auto& w : cfg.warnings()) std::cerr << "warning: " << w << '\n';
  return cfg;
}

void add_sim_header(Header& h, const SimConfig& cfg) {
  h.add("b", cfg.params.b);
  h.add("x", cfg.params.x);
  h.add("horizon", cfg.horizon);
  h.add("dt", cfg.dt);
  h.add("paths", cfg.n_paths);
  h.add("scheme", to_string(cfg.scheme));
}

// ---------------------------------------------------------------------------

struct RateArgs {
  std::string alpha_grid;
  std::string x_grid;
};

int run_rate(const Common& c, const RateArgs& a) {
  const ReflectionParams params{c.b, 0.0};
  params.validate();
  if (a.alpha_grid.empty() && a.x_grid.empty()) {
    throw ConfigError("rate needs --alpha-grid and/or --x-grid");
  }
  std::vector<double> alphas;
  std::vector<double> xs;
  Header h("rate");
  h.add("b", c.b);
  if (!a.alpha_grid.empty()) {
    const Grid g = parse_grid(a.alpha_grid);
    alphas = g.values();
    h.add("alpha_grid", g.str());
  }
  if (!a.x_grid.empty()) {
    const Grid g = parse_grid(a.x_grid);
    xs = g.values();
    h.add("x_grid", g.str());
  }
  const RateCurves curves = rate_curve_export(params, alphas, xs);

  const bool both = !alphas.empty() && !xs.empty();
  auto path_for = [&](const char* suffix) {
    if (!both || c.out.empty()) return c.out;
    const fs::path p(c.out);
    return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
  };
  if (!alphas.empty()) {
    Output o(path_for("_alpha"));
    h.write_comment(o.stream(), c.seed);
    write_v_csv(o.stream(), curves.v);
  }
  if (!xs.empty()) {
    Output o(path_for("_x"));
    if (!both || !c.out.empty()) h.write_comment(o.stream(), c.seed);
    write_vstar_csv(o.stream(), curves.v_star);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct MgfArgs {
  std::string x_grid;
  std::vector<int> residual_n;
};

int run_mgf(const Common& c, const MgfArgs& a) {
  MgfQuery q{{c.b, 0.0}, c.lambda.value_or(1.0), c.alpha.value_or(0.0)};
  q.params.validate();
  const Grid g = parse_grid(a.x_grid.empty() ? "0:" + fmt17(c.b) + ":11" : a.x_grid);
  Header h("mgf");
  h.add("b", c.b);
  h.add("alpha", q.alpha);
  h.add("lambda", q.lambda);
  h.add("x_grid", g.str());

  std::vector<std::string> rows;
  for (double x : g.values()) {
    const MgfValue v = f_hat(q, x);
    rows.push_back(fmt17(x) + "," + fmt17(v.value) + "," + fmt17(q.lambda * v.value) + "," +
                   (v.stable_form_used ? "true" : "false"));
  }
  Output o(c.out);
  h.write_comment(o.stream(), c.seed);
  for (int n : a.residual_n) {
    const OdeResidual r = ode_residual(q, n);
    o.stream() << "# ode_residual n=" << n << " interior=" << fmt17(r.interior)
               << " lower=" << fmt17(r.lower) << " upper=" << fmt17(r.upper) << '\n';
  }
  o.stream() << "x,f_hat,lambda_f_hat,stable_form\n";
  for (const auto& r : rows) o.stream() << r << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string functional = "all";
  int dump_paths = 0;
};

int run_simulate(const Common& c, const SimulateArgs& a) {
  const double horizon = c.t.value_or(1.0);
  const SimConfig cfg = sim_config(c, horizon, 1e-3, 1000);
  Header h("simulate");
  add_sim_header(h, cfg);

  if (a.dump_paths > 0) {
    if (static_cast<std::uint64_t>(a.dump_paths) > cfg.n_paths) {
      throw ConfigError("--dump-paths exceeds --paths");
    }
    h.add("dump_paths", static_cast<std::uint64_t>(a.dump_paths));
    const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
    fs::create_directories(dir);
    for (int i = 0; i < a.dump_paths; ++i) {
      const PathSample path = simulate_path(cfg, static_cast<std::uint64_t>(i));
      std::ofstream os(dir / ("path_" + std::to_string(i) + ".csv"), std::ios::binary);
      h.write_comment(os, cfg.seed);
      os << "# path_index=" << i << '\n';
      write_path_csv(os, path);
    }
    return kExitOk;
  }

  std::vector<std::string> names;
  if (a.functional == "all") {
    names = {"exp_tilt_L", "L_over_t", "U_over_t", "occupation_mean"};
  } else {
    names = {a.functional};
  }
  const double alpha = c.alpha.value_or(-1.0);
  h.add("functional", a.functional);
  h.add("alpha", alpha);
  ordered_json j;
  j["header"] = h.json(cfg.seed);
  j["results"] = ordered_json::array();
  for (const auto& name : names) {
    const Functional f = Functional::parse(name, horizon, alpha);
    const McEstimate e = mc_functional(cfg, f);
    ordered_json r;
    r["functional"] = name;
    if (f.kind == Functional::Kind::ExpTiltL) r["alpha"] = alpha;
    r["t"] = horizon;
    r["mean"] = e.mean;
    r["std_error"] = e.std_error;
    r["n_paths"] = e.n_paths;
    r["seed"] = e.seed;
    j["results"].push_back(std::move(r));
  }
  Output o(c.out);
  o.stream() << j.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string suite = "all";
  std::string t_list;
  std::optional<double> threshold;
  std::string estimator = "auto";
  int stride = 10;
};

int run_verify(const Common& c, const VerifyArgs& a) {
  static const std::vector<std::string> suites = {"laplace", "logmgf", "ldp", "ergodic"};
  std::vector<std::string> selected;
  if (a.suite == "all") {
    selected = suites;
  } else if (std::find(suites.begin(), suites.end(), a.suite) != suites.end()) {
    selected = {a.suite};
  } else {
    throw ConfigError("unknown suite '" + a.suite + "'");
  }
  const ReflectionParams params{c.b, c.x.value_or(0.0)};
  params.validate();
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);

  bool all_pass = true;
  for (const auto& suite : selected) {
    ExperimentReport rep;
    if (suite == "laplace") {
      const double alpha = c.alpha.value_or(-1.0);
      const double lambda = c.lambda.value_or(0.5);
      const double t_max = c.t.value_or(40.0 / lambda);
      const SimConfig cfg = sim_config(c, t_max, 1e-3, 20000);
      rep = laplace_consistency(params, alpha, lambda, cfg, t_max, {a.stride});
    } else if (suite == "logmgf") {
      const double alpha = c.alpha.value_or(-5.0);
      const std::vector<double> ts =
          a.t_list.empty() ? (alpha > 0 ? std::vector<double>{5, 10, 20}
                                        : std::vector<double>{5, 10, 20, 40})
                           : parse_list(a.t_list);
      const SimConfig cfg = sim_config(c, c.t.value_or(ts.back()), 1e-2, 5000);
      LogMgfOptions opt;
      opt.estimator = a.estimator == "auto"
                          ? (alpha < 0 ? LogMgfOptions::Estimator::Cloning
                                       : LogMgfOptions::Estimator::Plain)
                          : parse_estimator(a.estimator);
      if (opt.estimator == LogMgfOptions::Estimator::Plain && !c.paths) {
        SimConfig plain = cfg;
        plain.n_paths = 100000;
        rep = log_mgf_limit(params, alpha, ts, plain, opt);
      } else {
        rep = log_mgf_limit(params, alpha, ts, cfg, opt);
      }
    } else if (suite == "ldp") {
      const double threshold = a.threshold.value_or(0.8 / c.b);
      const std::vector<double> ts =
          a.t_list.empty() ? std::vector<double>{10, 20, 30, 40, 50, 60, 70, 80}
                           : parse_list(a.t_list);
      const SimConfig cfg = sim_config(c, c.t.value_or(ts.back()), 1e-2, 100000);
      rep = ldp_tail_decay(params, threshold, ts, cfg);
    } else {
      const double t = c.t.value_or(500.0);
      const SimConfig cfg = sim_config(c, t, 1e-3, 4000);
      rep = ergodic_limits(params, t, cfg);
    }
    const fs::path written = write_report(rep, dir, c.seed);
    std::cout << suite << ": " << (rep.overall_pass ? "PASS" : "FAIL") << "  (" << written.string()
              << ")\n";
    all_pass = all_pass && rep.overall_pass;
  }
  return all_pass ? kExitOk : kExitFailed;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
  std::string lambda_grid;
};

int run_export(const Common& c, const ExportArgs& a) {
  const ReflectionParams params{c.b, 0.0};
  params.validate();
  const double lo = extension_floor(c.b) + 1e-3 * -extension_floor(c.b);
  const Grid g = parse_grid(a.lambda_grid.empty() ? fmt17(lo) + ":10:200" : a.lambda_grid);
  Header h("export");
  h.add("b", c.b);
  h.add("lambda_grid", g.str());
  std::vector<std::string> rows;
  for (double lam : g.values()) {
    try {
      rows.push_back(fmt17(lam) + "," + fmt17(alpha_star(lam, params)) + "," +
                     fmt17(alpha_star_prime(lam, params)));
    } catch (const DomainError& e) {
      throw DomainError("lambda grid point " + fmt17(lam) + ": " + e.what());
    }
  }
  Output o(c.out);
  h.write_comment(o.stream(), c.seed);
  o.stream() << "lambda,alpha_star,alpha_star_prime\n";
  for (const auto& r : rows) o.stream() << r << '\n';
  return kExitOk;
}

// Splices `--key value` pairs from a --config file right after the
// subcommand, so explicit flags later on the line take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty() || args.empty()) return args;
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot read config file " + config_path);
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line without '=': " + line);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) != 0) key = "--" + key;
    injected.push_back(key + "=" + value);
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form rates and Monte-Carlo checks for the boundary local time of "
               "Brownian motion reflected on [0, b]"};
  app.require_subcommand(1);
  app.set_version_flag("--version", RLT_VERSION);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;

  RateArgs rate_args;
  auto* rate = app.add_subcommand("rate", "Tabulate V, V' on an alpha grid and V*, V*', lambda* on an x grid");
  add_b(rate, common);
  rate->add_option("--alpha-grid", rate_args.alpha_grid, "lo:hi:count grid of tilts alpha [1/length]");
  rate->add_option("--x-grid", rate_args.x_grid, "lo:hi:count grid of local-time rates x [length/time]");
  rate->add_option("--seed", common.seed, "Seed echoed in the header (no randomness used)");
  rate->add_option("--threads", common.threads, "Accepted for uniformity; closed forms are single-threaded");
  add_out(rate, common, "Output CSV path (stdout if omitted); with both grids, _alpha/_x suffixes");

  MgfArgs mgf_args;
  auto* mgf = app.add_subcommand("mgf", "Evaluate the resolvent f_hat(x; lambda, alpha) and ODE residuals");
  add_b(mgf, common);
  add_alpha(mgf, common, "Tilt alpha on L [1/length] (default 0)");
  add_lambda(mgf, common, "Resolvent rate lambda > V(alpha) [1/time] (default 1)");
  mgf->add_option("--x-grid", mgf_args.x_grid, "lo:hi:count grid of start points [length] (default 0:b:11)");
  mgf->add_option("--residual-n", mgf_args.residual_n, "Grid sizes for ODE residual checks (>= 16)");
  mgf->add_option("--seed", common.seed, "Seed echoed in the header (no randomness used)");
  mgf->add_option("--threads", common.threads, "Accepted for uniformity; closed forms are single-threaded");
  add_out(mgf, common, "Output CSV path (stdout if omitted)");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Simulate reflected paths: summary JSON or path CSVs");
  add_b(simulate, common);
  add_x(simulate, common);
  add_alpha(simulate, common, "Tilt for exp_tilt_L [1/length] (default -1)");
  add_sim(simulate, common, "Horizon t [time] (default 1)");
  simulate->add_option("--functional", sim_args.functional,
                       "exp_tilt_L, L_over_t, U_over_t, occupation_mean or all")
      ->capture_default_str();
  simulate->add_option("--dump-paths", sim_args.dump_paths,
                       "Write this many t,X,L,U path CSVs into the --out directory");
  add_out(simulate, common, "Summary JSON path, or directory for --dump-paths");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Run Monte-Carlo verification suites against the closed forms");
  verify->add_option("--suite", verify_args.suite, "laplace, logmgf, ldp, ergodic or all")
      ->capture_default_str();
  add_b(verify, common);
  add_x(verify, common);
  add_alpha(verify, common, "Tilt alpha [1/length] (laplace default -1, logmgf default -5)");
  add_lambda(verify, common, "Laplace rate lambda [1/time] (default 0.5)");
  add_sim(verify, common,
          "laplace: t_max [time] (default 40/lambda); ergodic: t [time] (default 500); "
          "logmgf/ldp: simulation horizon [time]");
  verify->add_option("--t-list", verify_args.t_list, "Comma-separated times [time] for logmgf and ldp");
  verify->add_option("--threshold", verify_args.threshold, "ldp threshold on L_t/t [length/time] (default 0.8/b)");
  verify->add_option("--estimator", verify_args.estimator,
                     "logmgf estimator: plain, cloning or auto (cloning for alpha < 0)")
      ->capture_default_str();
  verify->add_option("--stride", verify_args.stride, "laplace quadrature node stride in steps")
      ->capture_default_str();
  add_out(verify, common, "Directory for <suite>_<seed>.json/.csv reports (default .)");

  ExportArgs export_args;
  auto* exp = app.add_subcommand("export", "Tabulate alpha*(lambda) and its derivative for plotting");
  add_b(exp, common);
  exp->add_option("--lambda-grid", export_args.lambda_grid,
                  "lo:hi:count grid of lambda [1/time] (default just above -pi^2/(8b^2) to 10, 200 points)");
  exp->add_option("--seed", common.seed, "Seed echoed in the header (no randomness used)");
  exp->add_option("--threads", common.threads, "Accepted for uniformity; closed forms are single-threaded");
  add_out(exp, common, "Output CSV path (stdout if omitted)");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*rate) return run_rate(common, rate_args);
    if (*mgf) return run_mgf(common, mgf_args);
    if (*simulate) return run_simulate(common, sim_args);
    if (*verify) return run_verify(common, verify_args);
    if (*exp) return run_export(common, export_args);
  } catch (const VarianceError& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return kExitFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
