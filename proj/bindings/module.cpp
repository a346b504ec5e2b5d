#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "abcfb/async.hpp"
#include "abcfb/diagnostics.hpp"
#include "abcfb/experiment.hpp"
#include "abcfb/lasso.hpp"
#include "abcfb/ridge.hpp"
#include "abcfb/sim.hpp"
#include "abcfb/stepsize.hpp"
#include "abcfb/trace.hpp"

namespace py = pybind11;
using namespace abcfb;

namespace {

py::list trace_rows(const Trace& trace) {
  py::list rows;
  for (const auto& r : trace.records) {
    py::dict d;
    d["k"] = r.k;
    d["F"] = r.F;
    if (r.residual) d["residual"] = *r.residual;
    if (r.lyapunov) d["lyapunov"] = *r.lyapunov;
    if (r.step_norm_sq) d["step_norm_sq"] = *r.step_norm_sq;
    if (r.staleness) d["staleness"] = *r.staleness;
    rows.append(d);
  }
  return rows;
}

py::dict solve_spec(const ExperimentSpec& spec) {
  validate_experiment(spec);
  BuiltProblem built = build_problem(spec);
  const CompositeProblem& problem = built.problem();
  SolverConfig cfg = build_config(spec, problem);
  py::dict out;
  Trace trace;
  std::vector<double> x;
  if (spec.mode == "async") {
    const unsigned workers = effective_workers(spec.workers);
    AsyncResult r = built.ridge ? run_ridge_async(*built.ridge, cfg, workers, spec.tau)
                                : run_async(problem, cfg, workers, spec.tau);
    StalenessReport sr = measure_staleness(r.stats, spec.tau);
    out["staleness_max"] = sr.max;
    out["staleness_mean"] = sr.mean;
    out["tau_assumption_held"] = sr.assumption_held;
    x = r.x.values();
    trace = std::move(r.trace);
  } else {
    const bool tracked_ridge =
        built.ridge && cfg.delay.kind != DelayKind::per_block_uniform_iid;
    SimResult r = tracked_ridge ? run_ridge_sim(*built.ridge, cfg)
                                : run_sim(problem, cfg);
    x = r.x.values();
    trace = std::move(r.trace);
  }
  out["x"] = x;
  out["final_F"] = trace.final_F;
  out["final_residual"] = trace.final_residual;
  out["iterations"] = trace.total_iters;
  out["records"] = trace_rows(trace);
  return out;
}

py::dict stepsize_table(const ExperimentSpec& spec) {
  validate_experiment(spec);
  BuiltProblem built = build_problem(spec);
  const CompositeProblem& problem = built.problem();
  SolverConfig cfg = build_config(spec, problem);
  const double delta =
      compute_delta(cfg.stepsizes, problem.lipschitz, cfg.probabilities, spec.tau);
  py::dict out;
  out["gamma"] = cfg.stepsizes.gamma;
  out["delta"] = delta;
  out["L"] = problem.lipschitz.block;
  out["L_res"] = problem.lipschitz.residual;
  if (delta < 2.0) {
    RateConstants rc =
        rate_constants(delta, cfg.probabilities, spec.tau, problem.lipschitz, cfg.stepsizes);
    out["C_bound"] = rc.C_bound;
  }
  return out;
}

py::dict f_star(const ExperimentSpec& spec, double tol, std::uint64_t max_iters) {
  validate_experiment(spec);
  BuiltProblem built = build_problem(spec);
  ReferenceSolution ref = built.ridge
                              ? ridge_dual_reference(*built.ridge)
                              : estimate_F_star(built.problem(), tol, max_iters);
  py::dict out;
  out["F_star"] = ref.F_star;
  out["residual"] = ref.residual;
  out["iterations"] = ref.iterations;
  out["method"] = ref.method;
  out["x"] = ref.x.values();
  return out;
}

double eval_objective(const ExperimentSpec& spec, const std::vector<double>& x) {
  validate_experiment(spec);
  BuiltProblem built = build_problem(spec);
  const CompositeProblem& problem = built.problem();
  return eval_F(problem, BlockVector(problem.layout, x));
}

std::string emit_str(const ExperimentSpec& spec) {
  std::ostringstream os;
  emit_experiment(os, spec);
  return os.str();
}

ExperimentSpec parse_str(const std::string& text) {
  std::istringstream is(text);
  return parse_experiment(is);
}

}  // namespace

PYBIND11_MODULE(_abcfb, m) {
  m.doc() = "Asynchronous randomized block-coordinate forward-backward solver";

  py::class_<ExperimentSpec>(m, "ExperimentSpec")
      .def(py::init<>())
      .def_readwrite("problem", &ExperimentSpec::problem)
      .def_readwrite("rows", &ExperimentSpec::rows)
      .def_readwrite("cols", &ExperimentSpec::cols)
      .def_readwrite("lambda_", &ExperimentSpec::lambda)
      .def_readwrite("problem_seed", &ExperimentSpec::problem_seed)
      .def_readwrite("matrix_file", &ExperimentSpec::matrix_file)
      .def_readwrite("rhs_file", &ExperimentSpec::rhs_file)
      .def_readwrite("tau", &ExperimentSpec::tau)
      .def_readwrite("delay", &ExperimentSpec::delay)
      .def_readwrite("rule", &ExperimentSpec::rule)
      .def_readwrite("manual_gamma", &ExperimentSpec::manual_gamma)
      .def_readwrite("safety", &ExperimentSpec::safety)
      .def_readwrite("mode", &ExperimentSpec::mode)
      .def_readwrite("workers", &ExperimentSpec::workers)
      .def_readwrite("seed", &ExperimentSpec::seed)
      .def_readwrite("max_iters", &ExperimentSpec::max_iters)
      .def_readwrite("trace_every", &ExperimentSpec::trace_every)
      .def_readwrite("tol", &ExperimentSpec::tol)
      .def_readwrite("replications", &ExperimentSpec::replications)
      .def_readwrite("allow_unsafe", &ExperimentSpec::allow_unsafe)
      .def_readwrite("check_decomposition", &ExperimentSpec::check_decomposition)
      .def_readwrite("out", &ExperimentSpec::out)
      .def("__eq__", [](const ExperimentSpec& a, const ExperimentSpec& b) { return a == b; });

  m.def("solve", &solve_spec, py::arg("spec"),
        "Run one solve (sim or async) and return the final iterate and trace");
  m.def("stepsize_table", &stepsize_table, py::arg("spec"),
        "Stepsizes, contraction margin and rate constants for a spec");
  m.def("f_star", &f_star, py::arg("spec"), py::arg("tol") = 1e-10,
        py::arg("max_iters") = 2000000, "Independent reference optimal value");
  m.def("eval_objective", &eval_objective, py::arg("spec"), py::arg("x"),
        "Objective value of the spec's problem at x");
  m.def("soft_threshold", &soft_threshold, py::arg("v"), py::arg("rho"),
        "Scalar soft-thresholding operator");
  m.def("emit_config", &emit_str, py::arg("spec"));
  m.def("parse_config", &parse_str, py::arg("text"));

  py::register_exception<Error>(m, "SolverError");
}
