#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abcfb/block.hpp"
#include "abcfb/problem.hpp"
#include "abcfb/trace.hpp"

namespace abcfb {

// Delay-corrected objective terms. Both take the squared step norms
// |x^{h+1} - x^h|^2 for h = k-len .. k-1, oldest first, with len = min(k, tau)
// (steps before iteration 0 are zero by the backward extension x^j = x^0 and
// may be omitted or zero-padded). The h-th term carries the triangular weight
// h - (k - tau) + 1, i.e. the newest step weighs tau, the one before tau-1, ...
//
// alpha_k uses probability-weighted (V) squared norms and the constant
// L_res_V / (2 sqrt(p_max)) with L_res_V = L_res sqrt(p_max)/sqrt(p_min);
// alpha_tilde_k uses plain squared norms and the constant L_res / 2.
double alpha_k(std::span<const double> v_step_norms_sq, unsigned tau, double L_res_V,
               double p_max);
double alpha_tilde_k(std::span<const double> step_norms_sq, unsigned tau, double L_res);

// Rate findings extracted from a trace.
struct RateReport {
  double sublinear_constant = 0.0;       // sup over recorded k>=1 of k*(F(x^k)-F*)
  std::optional<double> fitted_rho;      // exp(slope of log gap vs floor(k/(tau+1)))
  std::optional<double> theory_rho;      // linear factor from rate_constants, if known
  std::size_t monotone_violations = 0;   // Lyapunov increases beyond tolerance
};

// Outcome of testing the explicit O(1/k) objective bound
//   mean F(x^k) - F_star <= (W_dist0_sq/2 + C_bound*(F(x^0)-F_star)) / k
// at every recorded k >= 1 of a (possibly replication-averaged) trace, plus a
// finite-data trend heuristic for o(1/k): the last-decile mean of k*gap must
// fall below the first-decile mean.
struct SublinearCheck {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;            // worst gap/bound over recorded k (<= 1 passes)
  double sublinear_constant = 0.0;   // sup k*gap
  bool trend_ok = false;
};

SublinearCheck check_sublinear(const Trace& trace, double F_star, double C_bound,
                               double W_dist0_sq);

// Least-squares slope of log(F(x^k)-F_star) against floor(k/(tau+1)) over the
// records with positive gap; returns exp(slope). Absent when fewer than two
// usable points remain (e.g. the gap hit zero).
std::optional<double> fit_linear_rate(const Trace& trace, double F_star, unsigned tau);

// Strict Lyapunov increases beyond tol along the trace's lyapunov column.
std::size_t count_lyapunov_violations(const Trace& trace, double tol);

// Convenience bundle over one trace. The violation tolerance is
// 1e-10*(1+|F(x^0)|) with F(x^0) taken from the first record.
RateReport rate_report(const Trace& trace, double F_star, unsigned tau,
                       std::optional<double> theory_rho = std::nullopt);

// Pointwise average of the F column across replications (all traces must be
// recorded on an identical iteration grid). Other optional columns are kept
// only where present in every replication (averaged as well).
Trace average_traces(const std::vector<Trace>& traces);

// A reference solution of min F produced independently of the randomized
// solvers, with enough metadata to audit where it came from.
struct ReferenceSolution {
  BlockVector x;
  double F_star = 0.0;
  double residual = 0.0;      // prox_grad_residual at x
  std::uint64_t iterations = 0;
  std::string method;
};

// Deterministic full proximal-gradient reference run with the uniform safe
// stepsize 1/L_res, iterated until prox_grad_residual <= tol. Throws Error if
// the tolerance is not reached within max_iters: no silent approximation.
ReferenceSolution estimate_F_star(const CompositeProblem& problem, double tol,
                                  std::uint64_t max_iters = 2000000,
                                  const BlockVector* start = nullptr);

}  // namespace abcfb
