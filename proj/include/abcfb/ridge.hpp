#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "abcfb/async.hpp"
#include "abcfb/diagnostics.hpp"
#include "abcfb/problem.hpp"
#include "abcfb/sim.hpp"

namespace abcfb {

// Dual of ridge regression over m samples x_1..x_m (rows of X) with labels y:
//
//   minimize over u in R^m   1/2 <(K + lambda m I) u, u> - <y, u>,  K = X X^T.
//
// Block i is the scalar u_i; the nonsmooth part is zero. The primal-side
// accumulator w = X^T u makes the partial gradient <x_i, w> + lambda m u_i - y_i
// an O(d) operation.
struct RidgeDualInstance {
  Eigen::MatrixXd X;  // m x d, row i is sample x_i
  Eigen::VectorXd y;  // m
  double lambda = 0.0;
  Eigen::MatrixXd K;  // X X^T, materialized
  CompositeProblem problem;  // oracle form of the dual objective (g = 0)

  std::size_t samples() const { return static_cast<std::size_t>(X.rows()); }
};

// L_i = K_ii + lambda m; L_res = |K + lambda m I| (power-iteration estimate,
// inflated by a 1e-6 relative margin like the other built-ins).
RidgeDualInstance make_ridge_dual(Eigen::MatrixXd X, Eigen::VectorXd y, double lambda);

// Random dense instance: X entries iid normal / sqrt(d), y = X w0 + noise.
RidgeDualInstance random_ridge(std::size_t m, std::size_t d, double lambda,
                               std::uint64_t seed, double noise_sigma = 0.05);

// Exact minimizer via the (K + lambda m I) linear solve; method metadata says
// so. F* = -1/2 <y, u*>.
ReferenceSolution ridge_dual_reference(const RidgeDualInstance& instance);

// One dual update with primal tracking, given the delayed reads:
//
//   u_i <- u_i - gamma (<x_i, delayed_w> + lambda m delayed_u_i - y_i)
//   w   <- w + x_i (u_i_new - u_i_old)
//
// The w increment is the exact KKT correction, so w == X^T u holds after
// every serial step.
void ridge_dual_step(const RidgeDualInstance& instance, std::size_t i, double gamma,
                     const Eigen::VectorXd& delayed_w, double delayed_u_i,
                     Eigen::VectorXd& u, Eigen::VectorXd& w);

// Serial delayed runner built on ridge_dual_step. The delay must be uniform
// across coordinates, which is what the primal-tracked form requires; models
// with per-block draws are rejected. Keeps a ring of (u, w) pairs for the
// delayed reads.
class RidgeSimState {
 public:
  RidgeSimState(const RidgeDualInstance& instance, SolverConfig config);

  StepRecord step();

  std::uint64_t k() const { return k_; }
  const Eigen::VectorXd& u() const { return u_; }
  const Eigen::VectorXd& w() const { return w_; }
  const std::deque<StepRecord>& recent_steps() const { return recent_; }

 private:
  const RidgeDualInstance* inst_;
  SolverConfig cfg_;
  Eigen::VectorXd u_, w_;
  std::vector<Eigen::VectorXd> u_ring_, w_ring_;  // slot j % (tau+1) holds step j
  AliasSampler sampler_;
  CounterRng block_rng_;
  CounterRng delay_rng_;
  std::uint64_t k_ = 0;
  std::deque<StepRecord> recent_;
};

SimResult run_ridge_sim(const RidgeDualInstance& instance, const SolverConfig& config);

// Asynchronous variant: dual cells are uncoordinated scalars updated with
// atomic increments; the primal accumulator update w += x_i du takes a lock
// (its reads stay uncoordinated). After quiescence w == X^T u up to the
// reassociation of the committed increments.
AsyncResult run_ridge_async(const RidgeDualInstance& instance, const SolverConfig& config,
                            unsigned workers, unsigned assumed_tau);

}  // namespace abcfb
