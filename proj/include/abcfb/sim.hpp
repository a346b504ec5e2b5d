#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "abcfb/block.hpp"
#include "abcfb/delay.hpp"
#include "abcfb/history.hpp"
#include "abcfb/problem.hpp"
#include "abcfb/rng.hpp"
#include "abcfb/stepsize.hpp"
#include "abcfb/trace.hpp"

namespace abcfb {

// Everything a randomized run needs besides the problem itself. The delay
// bound tau travels inside the delay model.
struct SolverConfig {
  BlockProbabilities probabilities;
  StepsizeSchedule stepsizes;
  DelayModel delay;
  std::uint64_t seed = 0;
  std::uint64_t max_iters = 1000;
  double residual_tol = 0.0;  // 0 disables the residual stop
  std::uint64_t trace_every = 1;
  bool allow_unsafe = false;        // skip the delta < 2 admission gate
  bool check_decomposition = false; // re-verify the delayed-read identity each step
};

// What one update did: which block, under which delay vector, and how far the
// block moved (squared, plain and probability-weighted).
struct StepRecord {
  std::uint64_t k = 0;  // index of the consumed iterate: the step maps x^k to x^{k+1}
  std::size_t block = 0;
  std::vector<unsigned> delay;
  double step_norm_sq = 0.0;
  double step_norm_sq_V = 0.0;
};

// Deterministic single-threaded executor of the delayed randomized
// block-coordinate forward-backward iteration
//
//   x_i^{k+1} = prox_{gamma_i g_i}( x_i^k - gamma_i grad_i f(xhat^k) ),  i = i_k,
//
// where xhat^k is the delayed read assembled per d^k. Block draws and delay
// draws come from two independent generator streams, so the delays never
// depend on the block sequence. Bit-reproducible for a fixed (seed, config).
class SimState {
 public:
  SimState(const CompositeProblem& problem, SolverConfig config, BlockVector x0);

  StepRecord step();

  std::uint64_t k() const { return k_; }
  const BlockVector& iterate() const { return x_; }
  const IterateHistory& history() const { return history_; }
  const SolverConfig& config() const { return cfg_; }
  // Records of the last min(k, tau) steps, oldest first.
  const std::deque<StepRecord>& recent_steps() const { return recent_; }

 private:
  const CompositeProblem* problem_;
  SolverConfig cfg_;
  BlockVector x_;
  IterateHistory history_;
  AliasSampler sampler_;
  CounterRng block_rng_;
  CounterRng delay_rng_;
  std::uint64_t k_ = 0;
  std::deque<StepRecord> recent_;
  std::vector<double> grad_, v_, px_;  // scratch
};

StepRecord sim_step(SimState& state);

struct SimResult {
  BlockVector x;
  Trace trace;
};

// Runs until max_iters updates or, checked at each trace point, the residual
// drops to residual_tol. Requires the contraction margin delta < 2 unless
// allow_unsafe is set. Trace rows carry F, residual, the delay-corrected
// objective F + alpha_tilde, the last squared step norm, and max_i d^k_i.
SimResult run_sim(const CompositeProblem& problem, const SolverConfig& config);
SimResult run_sim(const CompositeProblem& problem, const SolverConfig& config,
                  const BlockVector& x0);

// Checks the delayed-read decomposition at iteration k = history.newest():
// assembling xhat from d and replaying the recorded updates h with
// h >= k - d_{i_h} must reproduce x^k exactly, block by block, with pure
// copies and bitwise comparisons. records must cover h = max(0, k-tau)..k-1
// contiguously (a longer prefix is fine); missing records are a contract
// error. Returns false only if the stored history is inconsistent.
bool verify_decomposition(const IterateHistory& history,
                          std::span<const StepRecord> records, std::uint64_t k,
                          const std::vector<unsigned>& d);

}  // namespace abcfb
