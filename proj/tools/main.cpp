#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "abcfb/diagnostics.hpp"
#include "abcfb/errors.hpp"
#include "abcfb/experiment.hpp"
#include "abcfb/stepsize.hpp"
#include "abcfb/trace.hpp"

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Options shared by every subcommand that instantiates a problem.
void add_problem_options(CLI::App* cmd, abcfb::ExperimentSpec& spec) {
  cmd->add_option("--problem", spec.problem, "Built-in problem: lasso, ridge or quadratic");
  cmd->add_option("--rows", spec.rows, "Data rows (lasso) / samples (ridge)");
  cmd->add_option("--cols", spec.cols, "Blocks (lasso, quadratic) / features (ridge)");
  cmd->add_option("--lambda", spec.lambda, "Regularization weight");
  cmd->add_option("--problem-seed", spec.problem_seed, "Seed for the generated instance");
  cmd->add_option("--matrix", spec.matrix_file, "Read the data matrix from a file");
  cmd->add_option("--rhs", spec.rhs_file, "Read the right-hand side from a file");
}

int cmd_run(const abcfb::ExperimentSpec& spec) {
  abcfb::ExperimentOutcome outcome = abcfb::run_experiment(spec);
  for (const auto& [k, v] : outcome.report) std::cout << k << "=" << v << "\n";
  for (const auto& f : outcome.trace_files) std::cout << "file=" << f << "\n";
  return 0;
}

int cmd_stepsize(const abcfb::ExperimentSpec& spec, std::optional<double> eb, bool full) {
  abcfb::BuiltProblem built = abcfb::build_problem(spec);
  const abcfb::CompositeProblem& problem = built.problem();
  abcfb::SolverConfig cfg = abcfb::build_config(spec, problem);
  const double delta = abcfb::compute_delta(cfg.stepsizes, problem.lipschitz,
                                            cfg.probabilities, spec.tau);
  std::cout << "problem=" << problem.name << "\n";
  std::cout << "blocks=" << problem.layout.blocks() << "\n";
  std::cout << "rule=" << spec.rule << "\n";
  std::cout << "tau=" << spec.tau << "\n";
  std::cout << "safety=" << fmt(spec.safety) << "\n";
  std::cout << "L_res=" << fmt(problem.lipschitz.residual) << "\n";
  const auto& g = cfg.stepsizes.gamma;
  std::cout << "gamma_max=" << fmt(cfg.stepsizes.max()) << "\n";
  std::cout << "gamma_min=" << fmt(*std::min_element(g.begin(), g.end())) << "\n";
  std::cout << "delta=" << fmt(delta) << "\n";
  abcfb::RateConstants rc = abcfb::rate_constants(delta, cfg.probabilities, spec.tau,
                                                  problem.lipschitz, cfg.stepsizes, eb);
  std::cout << "C_bound=" << fmt(rc.C_bound) << "\n";
  if (rc.eb_constant) {
    std::cout << "eb_constant=" << fmt(*rc.eb_constant) << "\n";
    std::cout << "kappa=" << fmt(*rc.kappa) << "\n";
    std::cout << "theta=" << fmt(*rc.theta) << "\n";
    std::cout << "linear_factor=" << fmt(*rc.linear_factor) << "\n";
  }
  if (full) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::cout << "gamma[" << i << "]=" << fmt(g[i]) << "\n";
    }
  }
  return 0;
}

int cmd_fstar(const abcfb::ExperimentSpec& spec, double tol, std::uint64_t max_iters) {
  abcfb::BuiltProblem built = abcfb::build_problem(spec);
  abcfb::ReferenceSolution ref =
      built.ridge ? abcfb::ridge_dual_reference(*built.ridge)
                  : abcfb::estimate_F_star(built.problem(), tol, max_iters);
  std::cout << "problem=" << built.problem().name << "\n";
  std::cout << "F_star=" << fmt(ref.F_star) << "\n";
  std::cout << "residual=" << fmt(ref.residual) << "\n";
  std::cout << "iterations=" << ref.iterations << "\n";
  std::cout << "method=" << ref.method << "\n";
  return 0;
}

int cmd_verify(const std::string& trace_path, std::optional<double> F_star,
               std::optional<double> C_bound, std::optional<double> W_dist0_sq,
               std::optional<unsigned> tau, bool monotone) {
  std::ifstream is(trace_path, std::ios::binary);
  if (!is) throw abcfb::Error("cannot open trace file: " + trace_path);
  abcfb::Trace trace = abcfb::read_trace_csv(is);
  if (trace.records.empty()) throw abcfb::Error("trace is empty: " + trace_path);

  bool ok = true;
  bool grid_ok = true, finite_ok = true;
  for (std::size_t j = 0; j < trace.records.size(); ++j) {
    if (j && trace.records[j].k <= trace.records[j - 1].k) grid_ok = false;
    if (!std::isfinite(trace.records[j].F)) finite_ok = false;
  }
  std::cout << "records=" << trace.records.size() << "\n";
  std::cout << "grid_strictly_increasing=" << (grid_ok ? "true" : "false") << "\n";
  std::cout << "objective_finite=" << (finite_ok ? "true" : "false") << "\n";
  ok = ok && grid_ok && finite_ok;

  // The delay-corrected objective is only guaranteed monotone under the
  // sublevel stepsize rule, so the count gates the exit code on request only.
  const double tol = 1e-10 * (1.0 + std::abs(trace.records.front().F));
  const std::size_t lyap = abcfb::count_lyapunov_violations(trace, tol);
  std::cout << "lyapunov_violations=" << lyap << "\n";
  if (monotone) ok = ok && lyap == 0;

  if (F_star) {
    std::cout << "final_gap=" << fmt(trace.records.back().F - *F_star) << "\n";
    abcfb::RateReport rr = abcfb::rate_report(trace, *F_star, tau.value_or(0));
    std::cout << "sublinear_constant=" << fmt(rr.sublinear_constant) << "\n";
    if (tau && rr.fitted_rho) std::cout << "fitted_rho=" << fmt(*rr.fitted_rho) << "\n";
    if (C_bound && W_dist0_sq) {
      abcfb::SublinearCheck sc =
          abcfb::check_sublinear(trace, *F_star, *C_bound, *W_dist0_sq);
      std::cout << "bound_checked=" << sc.checked << "\n";
      std::cout << "bound_violations=" << sc.violations << "\n";
      std::cout << "bound_max_ratio=" << fmt(sc.max_ratio) << "\n";
      std::cout << "trend_ok=" << (sc.trend_ok ? "true" : "false") << "\n";
      ok = ok && sc.violations == 0;
    }
  }
  std::cout << "verified=" << (ok ? "true" : "false") << "\n";
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous randomized block-coordinate forward-backward solver"};
  app.require_subcommand(1);

  // --- run ---------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run replicated solves and write traces");
  std::string config_path;
  run->add_option("--config", config_path, "Key=value experiment description");
  abcfb::ExperimentSpec over;  // flag targets; applied over the config file
  add_problem_options(run, over);
  run->add_option("--tau", over.tau, "Delay bound the stepsizes assume");
  run->add_option("--delay", over.delay,
                  "Delay model: zero, constant:c, uniform_iid, per_block_uniform_iid, "
                  "adversarial_max");
  run->add_option("--rule", over.rule, "Stepsize rule: theorem or sublevel");
  run->add_option("--gamma", over.manual_gamma, "Explicit per-block stepsizes")
      ->delimiter(',');
  run->add_option("--safety", over.safety, "Stepsize safety factor in (0, 1)");
  run->add_option("--mode", over.mode, "Execution mode: sim or async");
  run->add_option("--workers", over.workers, "Async worker threads");
  run->add_option("--seed", over.seed, "Base run seed (replication r uses seed+r)");
  run->add_option("--max-iters", over.max_iters, "Updates per replication");
  run->add_option("--trace-every", over.trace_every, "Record every this many updates");
  run->add_option("--tol", over.tol, "Residual stopping threshold (0 disables)");
  run->add_option("--replications", over.replications, "Independent repetitions");
  run->add_flag("--allow-unsafe", "Run even when the contraction margin is >= 2");
  run->add_flag("--check-decomposition", "Re-verify the delayed-read identity each step");
  run->add_option("--out", over.out, "Output path prefix for traces and the report");
  bool emit_only = false;
  run->add_flag("--emit-config", emit_only, "Print the resolved config and exit");

  // --- stepsize ----------------------------------------------------------
  auto* step = app.add_subcommand("stepsize", "Print stepsizes and rate constants");
  abcfb::ExperimentSpec sspec;
  add_problem_options(step, sspec);
  step->add_option("--tau", sspec.tau, "Delay bound");
  step->add_option("--rule", sspec.rule, "Stepsize rule: theorem or sublevel");
  step->add_option("--safety", sspec.safety, "Safety factor in (0, 1)");
  double eb_value = 0.0;
  auto* eb_opt = step->add_option("--eb", eb_value,
                                  "Error-bound constant enabling the linear-rate factors");
  bool full = false;
  step->add_flag("--full", full, "Also print every per-block stepsize");

  // --- fstar ---------------------------------------------------------------
  auto* fstar = app.add_subcommand("fstar", "Compute a reference optimal value");
  abcfb::ExperimentSpec fspec;
  add_problem_options(fstar, fspec);
  double ftol = 1e-10;
  std::uint64_t fmax = 2000000;
  fstar->add_option("--tol", ftol, "Residual target for the reference solve");
  fstar->add_option("--max-iters", fmax, "Reference solve iteration cap");

  // --- verify --------------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "Check convergence properties of a trace");
  std::string trace_path;
  verify->add_option("--trace", trace_path, "Trace CSV to examine")->required();
  double vf = 0.0, vc = 0.0, vw = 0.0;
  unsigned vtau = 0;
  auto* vf_opt = verify->add_option("--f-star", vf, "Reference optimal value");
  auto* vc_opt = verify->add_option("--c-bound", vc, "Sublinear-rate constant");
  auto* vw_opt = verify->add_option("--w-dist0-sq", vw,
                                    "Squared weighted distance from x^0 to the solution set");
  auto* vtau_opt = verify->add_option("--tau", vtau, "Delay bound for the rate fit");
  bool vmono = false;
  verify->add_flag("--monotone", vmono,
                   "Require a nonincreasing delay-corrected objective (sublevel rule runs)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      abcfb::ExperimentSpec spec;
      if (run->count("--config")) spec = abcfb::parse_experiment_file(config_path);
      auto applied = [&](const std::string& flag) { return run->count(flag) > 0; };
      if (applied("--problem")) spec.problem = over.problem;
      if (applied("--rows")) spec.rows = over.rows;
      if (applied("--cols")) spec.cols = over.cols;
      if (applied("--lambda")) spec.lambda = over.lambda;
      if (applied("--problem-seed")) spec.problem_seed = over.problem_seed;
      if (applied("--matrix")) spec.matrix_file = over.matrix_file;
      if (applied("--rhs")) spec.rhs_file = over.rhs_file;
      if (applied("--tau")) spec.tau = over.tau;
      if (applied("--delay")) spec.delay = over.delay;
      if (applied("--rule")) spec.rule = over.rule;
      if (applied("--gamma")) {
        spec.manual_gamma = over.manual_gamma;
        if (!run->count("--rule")) spec.rule = "manual";
      }
      if (applied("--safety")) spec.safety = over.safety;
      if (applied("--mode")) spec.mode = over.mode;
      if (applied("--workers")) spec.workers = over.workers;
      if (applied("--seed")) spec.seed = over.seed;
      if (applied("--max-iters")) spec.max_iters = over.max_iters;
      if (applied("--trace-every")) spec.trace_every = over.trace_every;
      if (applied("--tol")) spec.tol = over.tol;
      if (applied("--replications")) spec.replications = over.replications;
      if (applied("--allow-unsafe")) spec.allow_unsafe = true;
      if (applied("--check-decomposition")) spec.check_decomposition = true;
      if (applied("--out")) spec.out = over.out;
      abcfb::validate_experiment(spec);
      if (emit_only) {
        abcfb::emit_experiment(std::cout, spec);
        return 0;
      }
      return cmd_run(spec);
    }
    if (*step) {
      abcfb::validate_experiment(sspec);
      std::optional<double> eb;
      if (eb_opt->count()) eb = eb_value;
      return cmd_stepsize(sspec, eb, full);
    }
    if (*fstar) {
      abcfb::validate_experiment(fspec);
      return cmd_fstar(fspec, ftol, fmax);
    }
    if (*verify) {
      std::optional<double> F_star, C_bound, W_dist0_sq;
      std::optional<unsigned> tau;
      if (vf_opt->count()) F_star = vf;
      if (vc_opt->count()) C_bound = vc;
      if (vw_opt->count()) W_dist0_sq = vw;
      if (vtau_opt->count()) tau = vtau;
      return cmd_verify(trace_path, F_star, C_bound, W_dist0_sq, tau, vmono);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
