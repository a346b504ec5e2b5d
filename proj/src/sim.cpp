#include "abcfb/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "abcfb/diagnostics.hpp"

namespace abcfb {

namespace {

// Stream ids of the two generator streams a simulator consumes.
constexpr std::uint64_t kBlockStream = 1;
constexpr std::uint64_t kDelayStream = 2;

void validate_config(const CompositeProblem& problem, const SolverConfig& cfg) {
  validate(problem);
  const std::size_t m = problem.layout.blocks();
  if (cfg.probabilities.size() != m || cfg.stepsizes.gamma.size() != m)
    throw StructuralError("config block count does not match problem");
  for (double g : cfg.stepsizes.gamma)
    if (!(g > 0.0)) throw ParameterError("stepsizes must be positive");
  if (cfg.max_iters < 1) throw ParameterError("max_iters must be at least 1");
  if (cfg.trace_every < 1) throw ParameterError("trace_every must be at least 1");
  if (!(cfg.residual_tol >= 0.0)) throw ParameterError("residual_tol must be nonnegative");
  if (cfg.delay.kind == DelayKind::constant && cfg.delay.value > cfg.delay.tau)
    throw ParameterError("constant delay exceeds the bound tau");
}

bool bits_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

SimState::SimState(const CompositeProblem& problem, SolverConfig config, BlockVector x0)
    : problem_(&problem),
      cfg_(std::move(config)),
      x_(std::move(x0)),
      history_(cfg_.delay.tau, x_),
      sampler_(cfg_.probabilities.values()),
      block_rng_(cfg_.seed, kBlockStream),
      delay_rng_(cfg_.seed, kDelayStream) {
  validate_config(problem, cfg_);
  if (x_.layout() != problem.layout) throw StructuralError("initial iterate layout mismatch");
}

StepRecord SimState::step() {
  const std::uint64_t k = k_;
  const std::size_t m = problem_->layout.blocks();

  std::vector<unsigned> d = gen_delay(cfg_.delay, k, m, delay_rng_);
  if (cfg_.check_decomposition) {
    const std::vector<StepRecord> recorded(recent_.begin(), recent_.end());
    if (!verify_decomposition(history_, recorded, k, d))
      throw ContractError("delayed-read decomposition failed");
  }

  const std::size_t i = sampler_.sample(block_rng_);
  const BlockVector xhat = delayed_read(history_, k, d);

  const std::size_t dim = problem_->layout.dim(i);
  grad_.resize(dim);
  v_.resize(dim);
  px_.resize(dim);
  problem_->partial_gradient(xhat, i, grad_);

  const double gamma = cfg_.stepsizes.gamma[i];
  auto xi = x_.block(i);
  for (std::size_t j = 0; j < dim; ++j) v_[j] = xi[j] - gamma * grad_[j];
  problem_->prox(i, v_, gamma, px_);

  StepRecord rec;
  rec.k = k;
  rec.block = i;
  rec.delay = std::move(d);
  rec.step_norm_sq = dist_sq(xi, px_);
  rec.step_norm_sq_V = cfg_.probabilities[i] * rec.step_norm_sq;

  x_.set_block(i, px_);
  ++k_;
  history_.push(x_);

  if (cfg_.delay.tau > 0) {
    recent_.push_back(rec);
    if (recent_.size() > cfg_.delay.tau) recent_.pop_front();
  }
  return rec;
}

StepRecord sim_step(SimState& state) { return state.step(); }

namespace {

TraceRecord make_record(const CompositeProblem& problem, const SolverConfig& cfg,
                        const SimState& state, const StepRecord* last) {
  TraceRecord r;
  r.k = state.k();
  r.F = eval_F(problem, state.iterate());
  r.residual = prox_grad_residual(problem, state.iterate(), cfg.stepsizes.gamma);

  std::vector<double> window;
  window.reserve(state.recent_steps().size());
  for (const StepRecord& s : state.recent_steps()) window.push_back(s.step_norm_sq);
  r.lyapunov = r.F + alpha_tilde_k(window, cfg.delay.tau, problem.lipschitz.residual);

  if (last) {
    r.step_norm_sq = last->step_norm_sq;
    unsigned dmax = 0;
    for (unsigned di : last->delay) dmax = std::max(dmax, di);
    r.staleness = dmax;
  }
  return r;
}

}  // namespace

SimResult run_sim(const CompositeProblem& problem, const SolverConfig& config) {
  return run_sim(problem, config, BlockVector(problem.layout));
}

SimResult run_sim(const CompositeProblem& problem, const SolverConfig& config,
                  const BlockVector& x0) {
  validate_config(problem, config);
  const double delta =
      compute_delta(config.stepsizes, problem.lipschitz, config.probabilities,
                    config.delay.tau);
  if (!(delta < 2.0) && !config.allow_unsafe)
    throw RuleViolationError("stepsize rule violated: delta >= 2");

  SimState state(problem, config, x0);
  Trace trace;
  trace.problem = problem.name;
  trace.seed = config.seed;
  trace.tau = config.delay.tau;

  trace.records.push_back(make_record(problem, config, state, nullptr));
  StepRecord last;
  bool stopped = false;
  while (state.k() < config.max_iters && !stopped) {
    last = state.step();
    if (state.k() % config.trace_every == 0 || state.k() == config.max_iters) {
      trace.records.push_back(make_record(problem, config, state, &last));
      if (config.residual_tol > 0.0 &&
          *trace.records.back().residual <= config.residual_tol)
        stopped = true;
    }
  }
  trace.total_iters = state.k();
  trace.final_F = trace.records.back().F;
  trace.final_residual = *trace.records.back().residual;
  return {state.iterate(), std::move(trace)};
}

bool verify_decomposition(const IterateHistory& history,
                          std::span<const StepRecord> records, std::uint64_t k,
                          const std::vector<unsigned>& d) {
  if (k != history.newest())
    throw ContractError("decomposition check must run at the newest iterate");
  const std::uint64_t window_lo = k > history.tau() ? k - history.tau() : 0;
  if (k > window_lo) {
    if (records.empty() || records.back().k != k - 1)
      throw ContractError("step records must end at iteration k-1");
    // Require contiguous coverage of [window_lo, k-1].
    if (records.size() < k - window_lo)
      throw ContractError("step records do not cover the delay window");
    for (std::size_t j = 1; j < records.size(); ++j)
      if (records[j].k != records[j - 1].k + 1)
        throw ContractError("step records are not contiguous");
  }

  const BlockVector& current = history.snapshot(k);
  if (d.size() != current.blocks())
    throw StructuralError("delay vector does not match block count");

  for (std::size_t i = 0; i < current.blocks(); ++i) {
    if (d[i] > std::min<std::uint64_t>(k, history.tau()))
      throw ContractError("delay exceeds min(k, tau)");
    // Expected value evolves from the delayed read of block i through every
    // recorded update of that block inside the read window.
    std::span<const double> expect = history.snapshot(k - d[i]).block(i);
    for (const StepRecord& r : records) {
      if (r.block != i) continue;
      if (r.k + static_cast<std::uint64_t>(d[i]) < k) continue;  // h < k - d_i
      if (!bits_equal(expect, history.snapshot(r.k).block(i))) return false;
      expect = history.snapshot(r.k + 1).block(i);
    }
    if (!bits_equal(expect, current.block(i))) return false;
  }
  return true;
}

}  // namespace abcfb
