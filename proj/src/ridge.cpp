#include "abcfb/ridge.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "abcfb/lasso.hpp"  // spectral_norm_sq
#include "abcfb/stepsize.hpp"

namespace abcfb {

namespace {

Eigen::MatrixXd regularized_gram(const Eigen::MatrixXd& K, double lambda) {
  const double lm = lambda * static_cast<double>(K.rows());
  Eigen::MatrixXd G = K;
  G.diagonal().array() += lm;
  return G;
}

}  // namespace

RidgeDualInstance make_ridge_dual(Eigen::MatrixXd X, Eigen::VectorXd y, double lambda) {
  if (X.rows() == 0 || X.cols() == 0) throw StructuralError("empty data matrix");
  if (y.size() != X.rows()) throw StructuralError("label length mismatch");
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");

  RidgeDualInstance inst;
  inst.X = std::move(X);
  inst.y = std::move(y);
  inst.lambda = lambda;
  inst.K = inst.X * inst.X.transpose();

  const std::size_t m = inst.samples();
  const double lm = lambda * static_cast<double>(m);

  struct Data {
    Eigen::MatrixXd G;  // K + lambda m I
    Eigen::VectorXd y;
  };
  auto d = std::make_shared<const Data>(Data{regularized_gram(inst.K, lambda), inst.y});

  CompositeProblem p;
  p.layout = BlockLayout::scalars(m);
  p.name = "ridge-dual";
  p.lipschitz.block.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    p.lipschitz.block[i] = inst.K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) + lm;
  // |K + lambda m I| via power iteration on its symmetric square root pattern:
  // reuse the generic estimator on a factor is not available, so run it on G
  // itself (G is PSD, |G| = largest eigenvalue = |G^{1/2}|^2 in the estimator's
  // A^T A convention when A = G^{1/2}; equivalently estimate on A = G and take
  // the square root).
  p.lipschitz.residual = std::sqrt(spectral_norm_sq(d->G)) * (1.0 + 1e-6);

  p.smooth_value = [d](const BlockVector& u) {
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), d->G.rows());
    return 0.5 * uv.dot(d->G * uv) - d->y.dot(uv);
  };
  p.partial_gradient = [d](const BlockVector& u, std::size_t i, std::span<double> out) {
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), d->G.rows());
    out[0] = d->G.row(static_cast<Eigen::Index>(i)).dot(uv) - d->y[static_cast<Eigen::Index>(i)];
  };
  p.full_gradient = [d](const BlockVector& u, std::span<double> out) {
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), d->G.rows());
    Eigen::Map<Eigen::VectorXd> ov(out.data(), d->G.rows());
    ov = d->G * uv - d->y;
  };
  attach_zero_g(p);

  inst.problem = std::move(p);
  return inst;
}

RidgeDualInstance random_ridge(std::size_t m, std::size_t d, double lambda,
                               std::uint64_t seed, double noise_sigma) {
  if (m == 0 || d == 0) throw StructuralError("empty instance");
  CounterRng entries(seed, 21);
  auto normal = [](CounterRng& rng) {
    const double u1 = 1.0 - rng.next_unit();
    const double u2 = rng.next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  };

  Eigen::MatrixXd X(m, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < d; ++c)
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = scale * normal(entries);

  Eigen::VectorXd w0(d);
  for (std::size_t c = 0; c < d; ++c) w0[static_cast<Eigen::Index>(c)] = normal(entries);

  Eigen::VectorXd y = X * w0;
  for (Eigen::Index r = 0; r < y.size(); ++r) y[r] += noise_sigma * normal(entries);

  return make_ridge_dual(std::move(X), std::move(y), lambda);
}

ReferenceSolution ridge_dual_reference(const RidgeDualInstance& instance) {
  const Eigen::MatrixXd G = regularized_gram(instance.K, instance.lambda);
  const Eigen::VectorXd u_star = Eigen::LLT<Eigen::MatrixXd>(G).solve(instance.y);

  ReferenceSolution ref;
  ref.x = BlockVector(instance.problem.layout,
                      std::vector<double>(u_star.data(), u_star.data() + u_star.size()));
  ref.F_star = -0.5 * instance.y.dot(u_star);
  const std::vector<double> gamma(instance.samples(), 1.0 / instance.problem.lipschitz.residual);
  ref.residual = prox_grad_residual(instance.problem, ref.x, gamma);
  ref.iterations = 0;
  ref.method = "linear-solve";
  return ref;
}

void ridge_dual_step(const RidgeDualInstance& instance, std::size_t i, double gamma,
                     const Eigen::VectorXd& delayed_w, double delayed_u_i,
                     Eigen::VectorXd& u, Eigen::VectorXd& w) {
  const auto ii = static_cast<Eigen::Index>(i);
  const double lm = instance.lambda * static_cast<double>(instance.samples());
  const double grad =
      instance.X.row(ii).dot(delayed_w) + lm * delayed_u_i - instance.y[ii];
  const double du = -gamma * grad;
  u[ii] += du;
  w += instance.X.row(ii).transpose() * du;
}

RidgeSimState::RidgeSimState(const RidgeDualInstance& instance, SolverConfig config)
    : inst_(&instance),
      cfg_(std::move(config)),
      u_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(instance.samples()))),
      w_(Eigen::VectorXd::Zero(instance.X.cols())),
      sampler_(cfg_.probabilities.values()),
      block_rng_(cfg_.seed, 1),
      delay_rng_(cfg_.seed, 2) {
  if (cfg_.delay.kind == DelayKind::per_block_uniform_iid)
    throw ParameterError("primal-tracked ridge runs need a delay uniform across blocks");
  if (cfg_.probabilities.size() != instance.samples() ||
      cfg_.stepsizes.gamma.size() != instance.samples())
    throw StructuralError("config block count does not match instance");
  u_ring_.assign(cfg_.delay.tau + 1u, u_);
  w_ring_.assign(cfg_.delay.tau + 1u, w_);
}

StepRecord RidgeSimState::step() {
  const std::uint64_t k = k_;
  const std::size_t m = inst_->samples();

  const std::vector<unsigned> dvec = gen_delay(cfg_.delay, k, m, delay_rng_);
  const unsigned d = dvec.front();  // uniform by construction
  const std::size_t i = sampler_.sample(block_rng_);

  const Eigen::VectorXd& w_delayed = w_ring_[(k - d) % (cfg_.delay.tau + 1u)];
  const double u_delayed_i = u_ring_[(k - d) % (cfg_.delay.tau + 1u)][static_cast<Eigen::Index>(i)];

  const double u_before = u_[static_cast<Eigen::Index>(i)];
  ridge_dual_step(*inst_, i, cfg_.stepsizes.gamma[i], w_delayed, u_delayed_i, u_, w_);
  const double du = u_[static_cast<Eigen::Index>(i)] - u_before;

  StepRecord rec;
  rec.k = k;
  rec.block = i;
  rec.delay = dvec;
  rec.step_norm_sq = du * du;
  rec.step_norm_sq_V = cfg_.probabilities[i] * rec.step_norm_sq;

  ++k_;
  u_ring_[k_ % (cfg_.delay.tau + 1u)] = u_;
  w_ring_[k_ % (cfg_.delay.tau + 1u)] = w_;
  if (cfg_.delay.tau > 0) {
    recent_.push_back(rec);
    if (recent_.size() > cfg_.delay.tau) recent_.pop_front();
  }
  return rec;
}

SimResult run_ridge_sim(const RidgeDualInstance& instance, const SolverConfig& config) {
  const double delta = compute_delta(config.stepsizes, instance.problem.lipschitz,
                                     config.probabilities, config.delay.tau);
  if (!(delta < 2.0) && !config.allow_unsafe)
    throw RuleViolationError("stepsize rule violated: delta >= 2");

  RidgeSimState state(instance, config);
  const CompositeProblem& p = instance.problem;

  Trace trace;
  trace.problem = p.name;
  trace.seed = config.seed;
  trace.tau = config.delay.tau;

  auto to_block = [&](const Eigen::VectorXd& u) {
    return BlockVector(p.layout, std::vector<double>(u.data(), u.data() + u.size()));
  };
  auto record = [&](const StepRecord* last) {
    const BlockVector x = to_block(state.u());
    TraceRecord r;
    r.k = state.k();
    r.F = eval_F(p, x);
    r.residual = prox_grad_residual(p, x, config.stepsizes.gamma);
    std::vector<double> window;
    for (const StepRecord& s : state.recent_steps()) window.push_back(s.step_norm_sq);
    r.lyapunov = r.F + alpha_tilde_k(window, config.delay.tau, p.lipschitz.residual);
    if (last) {
      r.step_norm_sq = last->step_norm_sq;
      r.staleness = last->delay.empty() ? 0u : last->delay.front();
    }
    trace.records.push_back(r);
    return *r.residual;
  };

  record(nullptr);
  StepRecord last;
  bool stopped = false;
  while (state.k() < config.max_iters && !stopped) {
    last = state.step();
    if (state.k() % config.trace_every == 0 || state.k() == config.max_iters) {
      const double residual = record(&last);
      if (config.residual_tol > 0.0 && residual <= config.residual_tol) stopped = true;
    }
  }
  trace.total_iters = state.k();
  trace.final_F = trace.records.back().F;
  trace.final_residual = *trace.records.back().residual;
  return {to_block(state.u()), std::move(trace)};
}

AsyncResult run_ridge_async(const RidgeDualInstance& instance, const SolverConfig& config,
                            unsigned workers, unsigned assumed_tau) {
  if (workers < 1) throw ParameterError("need at least one worker");
  const std::size_t m = instance.samples();
  const std::size_t dim = static_cast<std::size_t>(instance.X.cols());
  if (config.probabilities.size() != m || config.stepsizes.gamma.size() != m)
    throw StructuralError("config block count does not match instance");

  const CompositeProblem& p = instance.problem;
  const double delta =
      compute_delta(config.stepsizes, p.lipschitz, config.probabilities, assumed_tau);
  if (!(delta < 2.0) && !config.allow_unsafe)
    throw RuleViolationError("stepsize rule violated: delta >= 2");

  SharedIterate u_shared{BlockVector(p.layout)};
  std::vector<double> w_cells(dim, 0.0);
  std::mutex w_mutex;

  std::atomic<std::uint64_t> tickets{0};
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> max_staleness{0};
  std::mutex failure_mutex;
  std::string failure;

  const AliasSampler sampler(config.probabilities.values());
  const double lm = instance.lambda * static_cast<double>(m);

  struct Local {
    std::map<std::uint64_t, std::uint64_t> histogram;
    std::uint64_t updates = 0;
  };
  std::vector<Local> locals(workers);

  auto w_load = [&](std::size_t j) {
    return std::atomic_ref<double>(w_cells[j]).load(std::memory_order_relaxed);
  };

  auto worker_fn = [&](unsigned wid) {
    CounterRng rng(config.seed, 1000 + wid);
    Local& local = locals[wid];
    Eigen::VectorXd w_hat(static_cast<Eigen::Index>(dim));
    try {
      while (!stop.load(std::memory_order_relaxed)) {
        if (tickets.fetch_add(1, std::memory_order_relaxed) >= config.max_iters) break;

        const std::uint64_t c0 = u_shared.begin_read();
        const std::size_t i = sampler.sample(rng);
        const auto ii = static_cast<Eigen::Index>(i);

        // Uncoordinated reads of the primal accumulator and the own dual cell.
        for (std::size_t j = 0; j < dim; ++j) w_hat[static_cast<Eigen::Index>(j)] = w_load(j);
        const double u_hat_i = u_shared.load(i);

        const double grad = instance.X.row(ii).dot(w_hat) + lm * u_hat_i - instance.y[ii];
        const double du = -config.stepsizes.gamma[i] * grad;

        // The dual cell takes an atomic increment (g = 0 makes the prox the
        // identity, so the update is a pure increment on the current value);
        // the matching primal correction happens under the lock.
        u_shared.fetch_add(i, du);
        {
          std::scoped_lock lk(w_mutex);
          for (std::size_t j = 0; j < dim; ++j) {
            std::atomic_ref<double> cell(w_cells[j]);
            cell.store(cell.load(std::memory_order_relaxed) +
                           instance.X(ii, static_cast<Eigen::Index>(j)) * du,
                       std::memory_order_relaxed);
          }
        }

        const std::uint64_t c1 = u_shared.commit();
        const std::uint64_t stale = c1 - c0;
        ++local.histogram[stale];
        ++local.updates;
        std::uint64_t prev = max_staleness.load(std::memory_order_relaxed);
        while (prev < stale &&
               !max_staleness.compare_exchange_weak(prev, stale, std::memory_order_relaxed)) {
        }
      }
    } catch (const std::exception& e) {
      std::scoped_lock lk(failure_mutex);
      if (failure.empty()) failure = e.what();
      stop.store(true, std::memory_order_relaxed);
    }
  };

  Trace trace;
  trace.problem = p.name;
  trace.seed = config.seed;
  trace.tau = assumed_tau;

  auto observe = [&](std::uint64_t k) {
    BlockVector x(p.layout);
    u_shared.snapshot({x.data(), x.size()});
    TraceRecord r;
    r.k = k;
    r.F = eval_F(p, x);
    r.residual = prox_grad_residual(p, x, config.stepsizes.gamma);
    r.staleness = max_staleness.load(std::memory_order_relaxed);
    trace.records.push_back(r);
    return *r.residual;
  };

  observe(0);

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker_fn, w);

  std::uint64_t next_record = config.trace_every;
  while (true) {
    const std::uint64_t c = u_shared.committed();
    if (c >= config.max_iters || stop.load(std::memory_order_relaxed)) break;
    if (c >= next_record) {
      const double residual = observe(c);
      next_record = c - c % config.trace_every + config.trace_every;
      if (config.residual_tol > 0.0 && residual <= config.residual_tol)
        stop.store(true, std::memory_order_relaxed);
    }
    std::this_thread::sleep_for(std::chrono::microseconds(500));
  }
  for (auto& t : pool) t.join();
  if (!failure.empty()) throw Error("worker aborted: " + failure);

  AsyncResult result{BlockVector(p.layout), {}, {}};
  u_shared.snapshot({result.x.data(), result.x.size()});
  result.stats.per_worker.resize(workers);
  for (unsigned w = 0; w < workers; ++w) {
    result.stats.per_worker[w] = locals[w].updates;
    for (const auto& [s, c] : locals[w].histogram) {
      result.stats.histogram[s] += c;
      result.stats.max_observed = std::max(result.stats.max_observed, s);
    }
  }

  const std::uint64_t fin = u_shared.committed();
  while (!trace.records.empty() && trace.records.back().k >= fin) trace.records.pop_back();
  observe(fin);
  trace.total_iters = fin;
  trace.final_F = trace.records.back().F;
  trace.final_residual = *trace.records.back().residual;
  result.trace = std::move(trace);
  return result;
}

}  // namespace abcfb
