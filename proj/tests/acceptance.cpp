// Acceptance checks for the solver stack. Each numbered check prints exactly
// one PASS/FAIL line; the process exits nonzero if any check fails.
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "abcfb/async.hpp"
#include "abcfb/diagnostics.hpp"
#include "abcfb/lasso.hpp"
#include "abcfb/norms.hpp"
#include "abcfb/quadratic.hpp"
#include "abcfb/ridge.hpp"
#include "abcfb/rng.hpp"
#include "abcfb/sim.hpp"
#include "abcfb/stepsize.hpp"

using namespace abcfb;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

bool report(int n, const std::string& desc, const Outcome& o) {
  std::cout << (o.ok ? "PASS: " : "FAIL: ") << n << ". " << desc;
  if (!o.detail.empty()) std::cout << " [" << o.detail << "]";
  std::cout << "\n" << std::flush;
  return o.ok;
}

template <typename Fn>
bool run_check(int n, const std::string& desc, Fn fn) {
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o.ok = false;
    o.detail = std::string("exception: ") + e.what();
  }
  return report(n, desc, o);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// 1. Zero delay + a single block reduces the randomized iteration to the
//    classical serial proximal-gradient recursion.

Outcome check_classical_reduction() {
  const std::size_t dim = 8;
  BlockLayout layout({dim});
  std::vector<double> q = {1.7, 0.6, 2.2, 1.1, 0.9, 1.4, 0.5, 2.0};
  std::vector<double> b = {0.8, -1.2, 0.4, 1.5, -0.3, 0.9, -0.7, 1.1};
  const double lambda = 0.1;
  CompositeProblem p = make_diag_quadratic(layout, q, b);
  attach_l1_g(p, lambda);

  BlockProbabilities prob({1.0});
  StepsizeSchedule sched = max_stepsizes(StepsizeRule::theorem, p.lipschitz, prob, 0, 0.99);
  const double gamma = sched.gamma[0];

  SolverConfig cfg{prob, sched, DelayModel::zero(), 9, 1000, 0.0, 1000, false, false};
  std::vector<double> x0 = {1.5, -2.0, 3.0, 0.5, -0.25, 2.0, -1.0, 0.75};
  SimState state(p, cfg, BlockVector(layout, x0));

  // Independent serial reference: x <- soft(x - gamma (q x - b), gamma lambda).
  std::vector<double> ref = x0;
  double worst = 0.0;
  for (int it = 0; it < 1000; ++it) {
    state.step();
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = ref[j] - gamma * (q[j] * ref[j] - b[j]);
      const double t = lambda * gamma;
      ref[j] = std::copysign(std::max(std::abs(v) - t, 0.0), v);
    }
    const std::vector<double>& xs = state.iterate().values();
    for (std::size_t j = 0; j < dim; ++j) worst = std::max(worst, std::abs(xs[j] - ref[j]));
  }
  return {worst <= 1e-14, "max elementwise deviation " + fmt(worst) + " over 1000 iters"};
}

// ---------------------------------------------------------------------------
// 2 & 9. Per-realization monotonicity of F + alpha~ under the sublevel rule,
//    plus the no-divergence proxy (final residual below the initial one).

struct MonotoneOutcome {
  bool completed = false;
  std::size_t runs = 0;
  std::size_t certificate_violating_runs = 0;
  std::size_t objective_excess_runs = 0;
  std::size_t residual_up_runs = 0;
};

MonotoneOutcome run_monotone_study() {
  MonotoneOutcome out;
  LassoInstance lasso = random_lasso(50, 100, 0.1, 21);
  RidgeDualInstance ridge = random_ridge(50, 15, 0.4, 22);
  const std::vector<const CompositeProblem*> problems = {&lasso.problem, &ridge.problem};

  for (std::size_t pi = 0; pi < problems.size(); ++pi) {
    const CompositeProblem& problem = *problems[pi];
    BlockProbabilities prob = BlockProbabilities::uniform(problem.layout.blocks());
    for (unsigned tau : {0u, 2u, 5u, 10u}) {
      StepsizeSchedule sched =
          max_stepsizes(StepsizeRule::sublevel, problem.lipschitz, prob, tau, 0.99);
      for (std::uint64_t seed = 0; seed < 25; ++seed) {
        SolverConfig cfg{prob,
                         sched,
                         DelayModel::per_block_uniform(tau),
                         1000 * (pi + 1) + 97 * tau + seed,
                         2000,
                         0.0,
                         1,
                         false,
                         false};
        SimResult r = run_sim(problem, cfg);
        ++out.runs;

        const double F0 = r.trace.records.front().F;
        const double tol = 1e-10 * (1.0 + std::abs(F0));
        if (count_lyapunov_violations(r.trace, tol) != 0) ++out.certificate_violating_runs;
        double maxF = F0;
        for (const TraceRecord& rec : r.trace.records) maxF = std::max(maxF, rec.F);
        if (maxF > F0 + tol) ++out.objective_excess_runs;
        if (!(r.trace.final_residual < *r.trace.records.front().residual))
          ++out.residual_up_runs;
      }
    }
  }
  out.completed = true;
  return out;
}

// ---------------------------------------------------------------------------
// 3 & 4 (lasso half). Replication study under the theorem rule.

struct LassoStudy {
  LassoInstance inst;
  ReferenceSolution ref;
  Trace mean;
  double C_bound = 0.0;
  double W_dist0_sq = 0.0;
  unsigned tau = 5;
};

LassoStudy run_lasso_study() {
  LassoStudy s{random_lasso(50, 100, 0.1, 21), {}, {}, 0.0, 0.0, 5};
  const CompositeProblem& problem = s.inst.problem;
  s.ref = estimate_F_star(problem, 1e-10);

  BlockProbabilities prob = BlockProbabilities::uniform(problem.layout.blocks());
  StepsizeSchedule sched =
      max_stepsizes(StepsizeRule::theorem, problem.lipschitz, prob, s.tau, 0.99);
  const double delta = compute_delta(sched, problem.lipschitz, prob, s.tau);
  s.C_bound = rate_constants(delta, prob, s.tau, problem.lipschitz, sched).C_bound;
  s.W_dist0_sq =
      weighted_dist_sq(BlockVector(problem.layout), s.ref.x,
                       inverse_stepsize_probability_weights(sched.gamma, prob.values()));

  std::vector<Trace> traces;
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    SolverConfig cfg{prob, sched, DelayModel::per_block_uniform(s.tau), 500 + rep,
                     20000, 0.0, 10, false, false};
    traces.push_back(run_sim(problem, cfg).trace);
  }
  s.mean = average_traces(traces);
  return s;
}

// ---------------------------------------------------------------------------
// 5. Single-step conditional-expectation identity between weighted norms.

Outcome check_norm_identity() {
  BlockLayout layout({1, 2, 1});
  CompositeProblem p =
      make_diag_quadratic(layout, {1.2, 0.7, 1.9, 0.4}, {0.3, -0.5, 0.8, -0.1});
  attach_l1_g(p, 0.15);
  const std::vector<double> gamma = {0.5, 0.8, 0.3};
  const std::vector<double> pr = {0.2, 0.5, 0.3};
  WeightVector W = inverse_stepsize_probability_weights(gamma, pr);
  WeightVector Ginv = inverse_stepsize_weights(gamma);

  CounterRng rng(2024, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> xv(4), zv(4);
    for (auto* v : {&xv, &zv})
      for (double& c : *v) c = 4.0 * rng.next_unit() - 2.0;
    BlockVector x(layout, xv), z(layout, zv);

    // Per-block forward-backward candidates from the same state x.
    BlockVector xbar = x;
    double lhs = -weighted_dist_sq(x, z, W);
    for (std::size_t i = 0; i < 3; ++i) {
      std::vector<double> g = partial_grad(p, x, i);
      std::vector<double> v(g.size());
      auto xi = x.block(i);
      for (std::size_t j = 0; j < v.size(); ++j) v[j] = xi[j] - gamma[i] * g[j];
      std::vector<double> px = prox_block(p, i, v, gamma[i]);
      BlockVector xi_only = x;
      xi_only.set_block(i, px);
      xbar.set_block(i, px);
      lhs += pr[i] * weighted_dist_sq(xi_only, z, W);
    }
    const double rhs = weighted_dist_sq(xbar, z, Ginv) - weighted_dist_sq(x, z, Ginv);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return {worst <= 1e-12, "max |lhs-rhs| " + fmt(worst) + " over 100 states x 3 blocks"};
}

// ---------------------------------------------------------------------------
// 6. Delayed-read decomposition replays bitwise under every delay model.

Outcome check_decomposition_models() {
  LassoInstance inst = random_lasso(15, 20, 0.25, 33, 6);
  const unsigned tau = 10;
  BlockProbabilities prob = BlockProbabilities::uniform(20);
  StepsizeSchedule sched =
      max_stepsizes(StepsizeRule::sublevel, inst.problem.lipschitz, prob, tau, 0.99);
  const std::vector<DelayModel> models = {
      DelayModel::constant(0, tau), DelayModel::constant(7, tau), DelayModel::uniform(tau),
      DelayModel::per_block_uniform(tau), DelayModel::adversarial(tau)};
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    SolverConfig cfg{prob, sched, models[mi], 60 + mi, 10000, 0.0, 1000, false, true};
    SimResult r = run_sim(inst.problem, cfg);  // throws on any replay mismatch
    if (!std::isfinite(r.trace.final_F))
      return {false, "non-finite objective under delay model " + std::to_string(mi)};
  }
  return {true, "5 delay models x 10000 steps, tau=10, zero replay mismatches"};
}

// ---------------------------------------------------------------------------
// 7. Asynchronous engine accuracy and staleness accounting.

Outcome check_async_engine() {
  unsetenv("ABCFB_THREADS");
  LassoInstance inst = random_lasso(30, 40, 0.3, 44, 8);
  const CompositeProblem& problem = inst.problem;
  ReferenceSolution ref = estimate_F_star(problem, 1e-10);

  const unsigned assumed_tau = 16;
  BlockProbabilities prob = BlockProbabilities::uniform(40);
  StepsizeSchedule sched =
      max_stepsizes(StepsizeRule::theorem, problem.lipschitz, prob, assumed_tau, 0.99);

  SolverConfig cfg{prob, sched, DelayModel::zero(), 7, 200000, 0.0, 5000, false, false};
  AsyncResult four = run_async(problem, cfg, 4, assumed_tau);
  StalenessReport sr4 = measure_staleness(four.stats, assumed_tau);
  const double rel = std::abs(four.trace.final_F - ref.F_star) / std::abs(ref.F_star);

  SolverConfig cfg1 = cfg;
  cfg1.max_iters = 3000;
  AsyncResult one = run_async(problem, cfg1, 1, assumed_tau);
  StalenessReport sr1 = measure_staleness(one.stats, assumed_tau);

  const bool ok = rel <= 1e-6 && sr1.max == 0 && four.stats.total() == 200000;
  return {ok, "4-worker |F-F*|/|F*| " + fmt(rel) + ", staleness max " +
                  std::to_string(sr4.max) + " (mean " + fmt(sr4.mean) +
                  "), 1-worker staleness max " + std::to_string(sr1.max)};
}

// ---------------------------------------------------------------------------
// 8. Randomized stepsize sweep plus closed-form reductions.

Outcome check_stepsize_sweep() {
  CounterRng rng(77, 40);
  std::size_t cases = 0;
  for (int c = 0; c < 10000; ++c) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng.next_below(64));
    const unsigned tau = static_cast<unsigned>(rng.next_below(51));
    LipschitzData L;
    L.block.resize(m);
    double Lmax = 0.0;
    for (double& Li : L.block) {
      Li = 0.1 * std::exp(std::log(100.0) * rng.next_unit());
      Lmax = std::max(Lmax, Li);
    }
    L.residual = Lmax * (1.0 + 3.0 * rng.next_unit());
    std::vector<double> w(m);
    double sum = 0.0;
    for (double& v : w) {
      v = 0.05 + rng.next_unit();
      sum += v;
    }
    for (double& v : w) v /= sum;
    BlockProbabilities p(w);
    const double safety = 0.1 + 0.89 * rng.next_unit();

    // Each rule must strictly satisfy its own admissibility bound: the
    // theorem rule keeps the contraction margin below 2 for any p, the
    // sublevel rule stays inside its probability-free per-block cap.
    StepsizeSchedule theorem = max_stepsizes(StepsizeRule::theorem, L, p, tau, safety);
    const double delta = compute_delta(theorem, L, p, tau);
    if (!(delta < 2.0))
      return {false, "delta " + fmt(delta) + " >= 2 at case " + std::to_string(c)};
    StepsizeSchedule sublevel = max_stepsizes(StepsizeRule::sublevel, L, p, tau, safety);
    for (std::size_t i = 0; i < m; ++i) {
      const double cap = 2.0 / (L.block[i] + 2.0 * double(tau) * L.residual);
      if (!(sublevel.gamma[i] < cap))
        return {false, "sublevel stepsize at its cap in case " + std::to_string(c)};
    }
    ++cases;
  }

  // tau = 0 must reduce bitwise to the classical per-block rule.
  for (int c = 0; c < 200; ++c) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng.next_below(16));
    LipschitzData L;
    L.block.resize(m);
    for (double& Li : L.block) Li = 0.2 + 5.0 * rng.next_unit();
    L.residual = *std::max_element(L.block.begin(), L.block.end()) * 1.5;
    std::vector<double> w(m, 1.0);
    w[0] = 2.0;
    double sum = m + 1.0;
    for (double& v : w) v /= sum;
    const double safety = 0.5 + 0.49 * rng.next_unit();
    StepsizeSchedule sched =
        max_stepsizes(StepsizeRule::theorem, L, BlockProbabilities(w), 0, safety);
    for (std::size_t i = 0; i < m; ++i)
      if (sched.gamma[i] != safety * 2.0 / L.block[i])
        return {false, "tau=0 reduction differs at case " + std::to_string(c)};
  }

  // Uniform probabilities must reduce to the 1/sqrt(m) coupling form
  // (bitwise when sqrt(1/m) is exact, <= 2 ulp otherwise).
  for (std::size_t m : {4u, 9u, 16u, 25u, 49u, 64u}) {
    LipschitzData L;
    L.block.resize(m);
    CounterRng lr(m, 41);
    for (double& Li : L.block) Li = 0.3 + 4.0 * lr.next_unit();
    L.residual = *std::max_element(L.block.begin(), L.block.end()) * 2.0;
    const unsigned tau = 7;
    const double safety = 0.97;
    StepsizeSchedule sched =
        max_stepsizes(StepsizeRule::theorem, L, BlockProbabilities::uniform(m), tau, safety);
    const bool exact_sqrt = (m == 4 || m == 16 || m == 64);
    for (std::size_t i = 0; i < m; ++i) {
      const double want =
          safety * 2.0 / (L.block[i] + 2.0 * tau * L.residual / std::sqrt(double(m)));
      const double got = sched.gamma[i];
      if (exact_sqrt ? (got != want) : (std::abs(got - want) > 1e-15 * want))
        return {false, "uniform-p reduction differs at m=" + std::to_string(m)};
    }
  }
  return {true, std::to_string(cases) + " random cases, both rules in bounds; reductions match"};
}

}  // namespace

int main() {
  bool all_ok = true;

  all_ok &= run_check(1,
                      "zero-delay single-block run matches the serial proximal-gradient "
                      "recursion elementwise to 1e-14 over 1000 iterations",
                      check_classical_reduction);

  MonotoneOutcome mono;
  all_ok &= run_check(
      2,
      "descent certificate F + alpha~ never increases and F stays below F(x^0) in "
      "100 lasso and 100 ridge-dual runs (sublevel rule, tau in {0,2,5,10})",
      [&]() -> Outcome {
        mono = run_monotone_study();
        const bool ok = mono.runs == 200 && mono.certificate_violating_runs == 0 &&
                        mono.objective_excess_runs == 0;
        return {ok, std::to_string(mono.runs) + " runs, " +
                        std::to_string(mono.certificate_violating_runs) +
                        " certificate violations, " +
                        std::to_string(mono.objective_excess_runs) + " objective excesses"};
      });

  std::optional<LassoStudy> study;
  all_ok &= run_check(
      3,
      "replication-averaged lasso gap stays under the explicit O(1/k) bound at every "
      "recorded k (theorem rule, tau=5, 50 replications)",
      [&]() -> Outcome {
        study = run_lasso_study();
        SublinearCheck sc =
            check_sublinear(study->mean, study->ref.F_star, study->C_bound, study->W_dist0_sq);
        return {sc.violations == 0 && sc.checked >= 2000,
                std::to_string(sc.checked) + " points, " + std::to_string(sc.violations) +
                    " violations, max gap/bound ratio " + fmt(sc.max_ratio)};
      });

  all_ok &= run_check(
      4,
      "fitted contraction factor < 1 on lasso and ridge dual; ridge final objective "
      "matches the closed-form optimum to 1e-8 relative",
      [&]() -> Outcome {
        if (!study) return {false, "lasso study unavailable (check 3 failed earlier)"};
        auto rho_l = fit_linear_rate(study->mean, study->ref.F_star, study->tau);
        if (!rho_l) return {false, "no usable points for the lasso rate fit"};

        RidgeDualInstance ridge = random_ridge(50, 15, 0.4, 22);
        ReferenceSolution rref = ridge_dual_reference(ridge);
        BlockProbabilities prob = BlockProbabilities::uniform(50);
        StepsizeSchedule sched =
            max_stepsizes(StepsizeRule::sublevel, ridge.problem.lipschitz, prob, 5, 0.99);
        SolverConfig cfg{prob, sched, DelayModel::uniform(5), 31, 40000, 0.0, 10, false,
                         false};
        SimResult r = run_ridge_sim(ridge, cfg);
        auto rho_r = fit_linear_rate(r.trace, rref.F_star, 5);
        const double rel =
            std::abs(r.trace.final_F - rref.F_star) / std::abs(rref.F_star);

        const bool ok = *rho_l > 0.0 && *rho_l < 1.0 && rho_r && *rho_r > 0.0 &&
                        *rho_r < 1.0 && rel <= 1e-8;
        return {ok, "lasso rho " + fmt(*rho_l) + ", ridge rho " + (rho_r ? fmt(*rho_r) : "-") +
                        ", ridge |F-F*|/|F*| " + fmt(rel)};
      });

  all_ok &= run_check(5,
                      "one-step conditional-expectation identity between the weighted "
                      "norms holds to 1e-12 at 100 random states (3 blocks, exhaustive)",
                      check_norm_identity);

  all_ok &= run_check(6,
                      "delayed-read decomposition replays bitwise at every step of "
                      "10000-iteration runs under all five delay models (tau=10)",
                      check_decomposition_models);

  all_ok &= run_check(7,
                      "asynchronous engine with 4 workers reaches the reference optimum "
                      "to 1e-6 relative; staleness is reported and is 0 for 1 worker",
                      check_async_engine);

  all_ok &= run_check(8,
                      "10000 randomized stepsize cases: theorem schedules keep delta < 2, "
                      "sublevel schedules stay strictly inside their cap, and the zero-tau "
                      "and uniform-probability closed forms are reproduced",
                      check_stepsize_sweep);

  all_ok &= run_check(9,
                      "no divergence: the fixed-point residual ends below its starting "
                      "value in every monotonicity run",
                      [&]() -> Outcome {
                        if (!mono.completed)
                          return {false, "monotonicity runs unavailable (check 2 failed)"};
                        return {mono.residual_up_runs == 0,
                                std::to_string(mono.runs - mono.residual_up_runs) + "/" +
                                    std::to_string(mono.runs) + " runs ended lower"};
                      });

  return all_ok ? 0 : 1;
}
