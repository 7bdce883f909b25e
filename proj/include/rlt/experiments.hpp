#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlt/core_math.hpp"
#include "rlt/simulator.hpp"

namespace rlt {

using ordered_json = nlohmann::ordered_json;

struct ReportRow {
  ordered_json inputs = ordered_json::object();
  std::optional<double> closed_form;
  double mc_estimate = 0.0;
  double std_error = 0.0;
  std::optional<double> tolerance;
  bool pass = true;
  std::string note;
};

/// Outcome of one verification run. overall_pass is the conjunction of the
/// row flags; config_echo holds every input needed to rerun it exactly.
struct ExperimentReport {
  std::string name;
  ordered_json config_echo = ordered_json::object();
  std::vector<ReportRow> rows;
  std::string tolerance_spec;
  bool overall_pass = false;

  void finalize();
  ordered_json to_json() const;
  /// One line per row; input keys become leading columns.
  void write_csv(std::ostream& os) const;
};

/// Writes `<dir>/<name>_<seed>.json` and `.csv`; returns the JSON path.
std::filesystem::path write_report(const ExperimentReport& report,
                                   const std::filesystem::path& dir, std::uint64_t seed);

ordered_json echo(const SimConfig& cfg);

/// Tuning knobs shared by the verification harnesses; every field is echoed
/// into the report.
struct LaplaceOptions {
  /// Quadrature nodes every `stride` simulation steps.
  int stride = 10;
};

/// Simpson quadrature of t -> exp(-lambda t) E_x exp(alpha L_t) on
/// [0, t_max] from simulated paths, compared with f_hat. One row per alpha;
/// all alphas share the same paths. Passes when
/// |Q_h - f_hat| < 3 SE + exp(-lambda t_max) m(t_max) / lambda + |Q_h - Q_2h|,
/// where Q_2h reuses every other node as a quadrature error estimate.
ExperimentReport laplace_consistency(const ReflectionParams& params,
                                     std::span<const double> alphas, double lambda,
                                     const SimConfig& sim, double t_max,
                                     const LaplaceOptions& opt = {});

ExperimentReport laplace_consistency(const ReflectionParams& params, double alpha,
                                     double lambda, const SimConfig& sim, double t_max,
                                     const LaplaceOptions& opt = {});

struct LogMgfOptions {
  enum class Estimator {
    /// Sample mean of exp(alpha L_t) over independent paths.
    Plain,
    /// Population of sim.n_paths particles reweighted by exp(alpha dL) and
    /// resampled every `resample_interval`; the product of mean weights is an
    /// unbiased estimate of E exp(alpha L_t). Independent populations
    /// (`replicas`) supply the standard error.
    Cloning,
  };
  Estimator estimator = Estimator::Plain;
  std::uint64_t replicas = 16;
  double resample_interval = 0.1;
};

const char* to_string(LogMgfOptions::Estimator e);
LogMgfOptions::Estimator parse_estimator(const std::string& name);

/// (1/t) log E_x exp(alpha L_t) at each t against V(alpha). Throws
/// VarianceError when the relative standard error of the mean exceeds 30%.
ExperimentReport log_mgf_limit(const ReflectionParams& params, double alpha,
                               std::span<const double> t_list, const SimConfig& sim,
                               const LogMgfOptions& opt = {});

/// Cloning estimate of E_x exp(alpha L_t) at each t for one population.
std::vector<double> cloning_mgf(const SimConfig& cfg, double alpha,
                                std::span<const std::uint64_t> step_indices,
                                std::uint64_t replica, std::uint64_t resample_steps);

struct TailOptions {
  std::uint64_t min_hits = 50;
  double rel_tol = 0.2;
};

/// -(1/t) log P(L_t / t beyond x_threshold) against V*(x_threshold); the
/// right tail is used above 1/(2b) and the left tail below.
ExperimentReport ldp_tail_decay(const ReflectionParams& params, double x_threshold,
                                std::span<const double> t_list, const SimConfig& sim,
                                const TailOptions& opt = {});

/// L_t/t and U_t/t against 1/(2b), time-average of X against b/2, a
/// chi-square uniformity test of X_t and the informational Var(L_t)/t.
ExperimentReport ergodic_limits(const ReflectionParams& params, double t,
                                const SimConfig& sim);

/// sup over an alpha grid of [alpha x - V(alpha)].
double legendre_grid_sup(double x, const ReflectionParams& params, double alpha_lo,
                         double alpha_hi, int n);

struct RateCurves {
  std::vector<RateEval> v;
  std::vector<RateEval> v_star;
};

RateCurves rate_curve_export(const ReflectionParams& params,
                             std::span<const double> alpha_grid,
                             std::span<const double> x_grid);

/// alpha,V,V_prime
void write_v_csv(std::ostream& os, std::span<const RateEval> rows);
/// x,V_star,V_star_prime,lambda_star (empty fields at x = 0)
void write_vstar_csv(std::ostream& os, std::span<const RateEval> rows);

/// Chi-square upper tail probability with `dof` degrees of freedom.
double chi_square_p_value(double statistic, int dof);

}  // namespace rlt
