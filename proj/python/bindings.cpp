#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rlt/core_math.hpp"
#include "rlt/errors.hpp"
#include "rlt/experiments.hpp"
#include "rlt/mgf.hpp"
#include "rlt/simulator.hpp"

namespace py = pybind11;
using namespace rlt;

namespace {

py::object to_python(const ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict rate_eval(const RateEval& r) {
  py::dict d;
  d["point"] = r.point;
  d["value"] = r.value;
  d["derivative"] = r.derivative ? py::cast(*r.derivative) : py::none();
  d["lambda_star"] = r.lambda_star ? py::cast(*r.lambda_star) : py::none();
  return d;
}

SimConfig make_config(double b, double x, double horizon, double dt, std::uint64_t n_paths,
                      std::uint64_t seed, const std::string& scheme, unsigned threads) {
  SimConfig cfg;
  cfg.params = {b, x};
  cfg.horizon = horizon;
  cfg.dt = dt;
  cfg.n_paths = n_paths;
  cfg.seed = seed;
  cfg.scheme = parse_scheme(scheme);
  cfg.threads = threads;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Boundary local time of Brownian motion reflected on [0, b]";
  m.attr("__version__") = RLT_VERSION;

  auto domain_error = py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UnknownFunctional>(m, "UnknownFunctional", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<VarianceError>(m, "VarianceError", PyExc_RuntimeError);
  py::register_exception<OverflowError>(m, "OverflowError", PyExc_OverflowError);
  (void)domain_error;

  auto params = [](double b) { return ReflectionParams{b, 0.0}; };

  m.def("extension_floor", &extension_floor, py::arg("b") = 1.0);
  m.def(
      "alpha_star", [=](double lam, double b) { return alpha_star(lam, params(b)); },
      py::arg("lam"), py::arg("b") = 1.0);
  m.def(
      "alpha_star_prime", [=](double lam, double b) { return alpha_star_prime(lam, params(b)); },
      py::arg("lam"), py::arg("b") = 1.0);
  m.def(
      "alpha_star_second",
      [=](double lam, double b) { return alpha_star_second(lam, params(b)); }, py::arg("lam"),
      py::arg("b") = 1.0);
  m.def(
      "big_v", [=](double alpha, double b) { return rate_eval(big_v(alpha, params(b))); },
      py::arg("alpha"), py::arg("b") = 1.0,
      "V(alpha) and V'(alpha) as a dict");
  m.def(
      "lambda_star", [=](double x, double b) { return lambda_star(x, params(b)); },
      py::arg("x"), py::arg("b") = 1.0);
  m.def(
      "v_star", [=](double x, double b) { return rate_eval(v_star(x, params(b))); },
      py::arg("x"), py::arg("b") = 1.0, "V*(x), its slope and lambda* as a dict");

  m.def(
      "f_hat",
      [](double x, double lam, double alpha, double b) {
        const MgfValue v = f_hat({{b, 0.0}, lam, alpha}, x);
        py::dict d;
        d["value"] = v.value;
        d["stable_form_used"] = v.stable_form_used;
        d["domain_margin"] = v.domain_margin;
        return d;
      },
      py::arg("x"), py::arg("lam"), py::arg("alpha"), py::arg("b") = 1.0);
  m.def(
      "hitting_laplace",
      [](double lam, double x, double b) { return hitting_laplace({b, 0.0}, lam, x); },
      py::arg("lam"), py::arg("x"), py::arg("b") = 1.0);
  m.def(
      "ode_residual",
      [](double lam, double alpha, int grid_n, double b) {
        const OdeResidual r = ode_residual({{b, 0.0}, lam, alpha}, grid_n);
        py::dict d;
        d["interior"] = r.interior;
        d["lower"] = r.lower;
        d["upper"] = r.upper;
        return d;
      },
      py::arg("lam"), py::arg("alpha"), py::arg("grid_n"), py::arg("b") = 1.0);

  m.def(
      "simulate_path",
      [](double b, double x, double horizon, double dt, std::uint64_t seed,
         std::uint64_t path_index, const std::string& scheme) {
        const SimConfig cfg = make_config(b, x, horizon, dt, path_index + 1, seed, scheme, 1);
        const PathSample p = simulate_path(cfg, path_index);
        py::dict d;
        d["t"] = to_array(p.t);
        d["X"] = to_array(p.x);
        d["L"] = to_array(p.l);
        d["U"] = to_array(p.u);
        return d;
      },
      py::arg("b") = 1.0, py::arg("x") = 0.0, py::arg("horizon") = 1.0, py::arg("dt") = 1e-3,
      py::arg("seed") = 0, py::arg("path_index") = 0, py::arg("scheme") = "bridge");
  m.def(
      "mc_functional",
      [](const std::string& name, double b, double x, double horizon, double dt,
         std::uint64_t n_paths, std::uint64_t seed, double alpha, const std::string& scheme,
         unsigned threads) {
        const SimConfig cfg = make_config(b, x, horizon, dt, n_paths, seed, scheme, threads);
        McEstimate e;
        {
          py::gil_scoped_release release;
          e = mc_functional(cfg, Functional::parse(name, horizon, alpha));
        }
        py::dict d;
        d["mean"] = e.mean;
        d["std_error"] = e.std_error;
        d["n_paths"] = e.n_paths;
        d["seed"] = e.seed;
        return d;
      },
      py::arg("name"), py::arg("b") = 1.0, py::arg("x") = 0.0, py::arg("horizon") = 1.0,
      py::arg("dt") = 1e-3, py::arg("n_paths") = 1000, py::arg("seed") = 0,
      py::arg("alpha") = 0.0, py::arg("scheme") = "bridge", py::arg("threads") = 0);

  m.def(
      "laplace_consistency",
      [](double alpha, double lam, double t_max, double b, double x, double dt,
         std::uint64_t n_paths, std::uint64_t seed, unsigned threads) {
        const SimConfig cfg = make_config(b, x, t_max, dt, n_paths, seed, "bridge", threads);
        ExperimentReport rep;
        {
          py::gil_scoped_release release;
          rep = laplace_consistency({b, x}, alpha, lam, cfg, t_max);
        }
        return to_python(rep.to_json());
      },
      py::arg("alpha"), py::arg("lam"), py::arg("t_max"), py::arg("b") = 1.0,
      py::arg("x") = 0.0, py::arg("dt") = 1e-3, py::arg("n_paths") = 20000,
      py::arg("seed") = 0, py::arg("threads") = 0);
  m.def(
      "log_mgf_limit",
      [](double alpha, std::vector<double> t_list, double b, double x, double dt,
         std::uint64_t n_paths, std::uint64_t seed, const std::string& estimator,
         unsigned threads) {
        if (t_list.empty()) throw ConfigError("t_list is empty");
        const SimConfig cfg =
            make_config(b, x, t_list.back(), dt, n_paths, seed, "bridge", threads);
        LogMgfOptions opt;
        opt.estimator = parse_estimator(estimator);
        ExperimentReport rep;
        {
          py::gil_scoped_release release;
          rep = log_mgf_limit({b, x}, alpha, t_list, cfg, opt);
        }
        return to_python(rep.to_json());
      },
      py::arg("alpha"), py::arg("t_list"), py::arg("b") = 1.0, py::arg("x") = 0.0,
      py::arg("dt") = 1e-2, py::arg("n_paths") = 5000, py::arg("seed") = 0,
      py::arg("estimator") = "cloning", py::arg("threads") = 0);
  m.def(
      "ldp_tail_decay",
      [](double threshold, std::vector<double> t_list, double b, double x, double dt,
         std::uint64_t n_paths, std::uint64_t seed, unsigned threads) {
        if (t_list.empty()) throw ConfigError("t_list is empty");
        const SimConfig cfg =
            make_config(b, x, t_list.back(), dt, n_paths, seed, "bridge", threads);
        ExperimentReport rep;
        {
          py::gil_scoped_release release;
          rep = ldp_tail_decay({b, x}, threshold, t_list, cfg);
        }
        return to_python(rep.to_json());
      },
      py::arg("threshold"), py::arg("t_list"), py::arg("b") = 1.0, py::arg("x") = 0.0,
      py::arg("dt") = 1e-2, py::arg("n_paths") = 100000, py::arg("seed") = 0,
      py::arg("threads") = 0);
  m.def(
      "ergodic_limits",
      [](double t, double b, double x, double dt, std::uint64_t n_paths, std::uint64_t seed,
         unsigned threads) {
        const SimConfig cfg = make_config(b, x, t, dt, n_paths, seed, "bridge", threads);
        ExperimentReport rep;
        {
          py::gil_scoped_release release;
          rep = ergodic_limits({b, x}, t, cfg);
        }
        return to_python(rep.to_json());
      },
      py::arg("t"), py::arg("b") = 1.0, py::arg("x") = 0.0, py::arg("dt") = 1e-3,
      py::arg("n_paths") = 4000, py::arg("seed") = 0, py::arg("threads") = 0);
}
