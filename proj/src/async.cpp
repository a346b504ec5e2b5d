#include "abcfb/async.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <string>
#include <thread>

#include "abcfb/stepsize.hpp"

namespace abcfb {

SharedIterate::SharedIterate(const BlockVector& x0) : cells_(x0.values()) {}

double SharedIterate::load(std::size_t j) const {
  // atomic_ref requires a mutable lvalue even for pure loads.
  return std::atomic_ref<double>(const_cast<double&>(cells_[j]))
      .load(std::memory_order_relaxed);
}

void SharedIterate::store(std::size_t j, double v) {
  std::atomic_ref<double>(cells_[j]).store(v, std::memory_order_relaxed);
}

double SharedIterate::fetch_add(std::size_t j, double dv) {
  std::atomic_ref<double> cell(cells_[j]);
  double old = cell.load(std::memory_order_relaxed);
  while (!cell.compare_exchange_weak(old, old + dv, std::memory_order_relaxed)) {
  }
  return old + dv;
}

void SharedIterate::snapshot(std::span<double> out) const {
  for (std::size_t j = 0; j < cells_.size(); ++j) out[j] = load(j);
}

std::uint64_t SharedIterate::begin_read() const {
  return commits_.load(std::memory_order_acquire);
}

std::uint64_t SharedIterate::commit() {
  return commits_.fetch_add(1, std::memory_order_acq_rel);
}

std::uint64_t SharedIterate::committed() const {
  return commits_.load(std::memory_order_acquire);
}

std::uint64_t StalenessStats::total() const {
  std::uint64_t t = 0;
  for (const auto& [_, c] : histogram) t += c;
  return t;
}

StalenessReport measure_staleness(const StalenessStats& stats, unsigned assumed_tau) {
  StalenessReport rep;
  rep.assumed_tau = assumed_tau;
  rep.max = stats.max_observed;
  rep.total_updates = stats.total();
  rep.assumption_held = rep.max <= assumed_tau;
  if (rep.total_updates == 0) return rep;

  double sum = 0.0;
  for (const auto& [s, c] : stats.histogram) sum += static_cast<double>(s) * c;
  rep.mean = sum / static_cast<double>(rep.total_updates);

  auto quantile = [&](double q) -> std::uint64_t {
    const auto want = static_cast<std::uint64_t>(q * static_cast<double>(rep.total_updates - 1));
    std::uint64_t seen = 0;
    for (const auto& [s, c] : stats.histogram) {
      seen += c;
      if (seen > want) return s;
    }
    return rep.max;
  };
  rep.p50 = quantile(0.50);
  rep.p90 = quantile(0.90);
  rep.p99 = quantile(0.99);
  return rep;
}

namespace {

struct WorkerLocal {
  std::map<std::uint64_t, std::uint64_t> histogram;
  std::uint64_t updates = 0;
};

}  // namespace

AsyncResult run_async(const CompositeProblem& problem, const SolverConfig& config,
                      unsigned workers, unsigned assumed_tau) {
  validate(problem);
  if (workers < 1) throw ParameterError("need at least one worker");
  const std::size_t m = problem.layout.blocks();
  if (config.probabilities.size() != m || config.stepsizes.gamma.size() != m)
    throw StructuralError("config block count does not match problem");
  if (config.max_iters < 1) throw ParameterError("max_iters must be at least 1");

  const double delta = compute_delta(config.stepsizes, problem.lipschitz,
                                     config.probabilities, assumed_tau);
  if (!(delta < 2.0) && !config.allow_unsafe)
    throw RuleViolationError("stepsize rule violated: delta >= 2");

  SharedIterate shared{BlockVector(problem.layout)};
  // run_async starts from the zero vector like the zero-argument run_sim.
  std::atomic<std::uint64_t> tickets{0};
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> max_staleness{0};
  std::mutex failure_mutex;
  std::string failure;

  const AliasSampler sampler(config.probabilities.values());
  std::vector<WorkerLocal> locals(workers);

  auto worker_fn = [&](unsigned w) {
    CounterRng rng(config.seed, 1000 + w);
    WorkerLocal& local = locals[w];
    BlockVector xhat(problem.layout);
    std::vector<double> grad, v, px;
    try {
      while (!stop.load(std::memory_order_relaxed)) {
        if (tickets.fetch_add(1, std::memory_order_relaxed) >= config.max_iters) break;

        const std::uint64_t c0 = shared.begin_read();
        const std::size_t i = sampler.sample(rng);

        shared.snapshot({xhat.data(), xhat.size()});
        const std::size_t dim = problem.layout.dim(i);
        const std::size_t off = problem.layout.offset(i);
        grad.resize(dim);
        v.resize(dim);
        px.resize(dim);
        problem.partial_gradient(xhat, i, grad);

        const double gamma = config.stepsizes.gamma[i];
        // The prox argument is based on the block's current content, re-read
        // just before committing.
        for (std::size_t j = 0; j < dim; ++j)
          v[j] = shared.load(off + j) - gamma * grad[j];
        problem.prox(i, v, gamma, px);
        for (std::size_t j = 0; j < dim; ++j) shared.store(off + j, px[j]);

        const std::uint64_t c1 = shared.commit();
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
  trace.problem = problem.name;
  trace.seed = config.seed;
  trace.tau = assumed_tau;

  auto observe = [&](std::uint64_t k) {
    BlockVector x(problem.layout);
    shared.snapshot({x.data(), x.size()});
    TraceRecord r;
    r.k = k;
    r.F = eval_F(problem, x);
    r.residual = prox_grad_residual(problem, x, config.stepsizes.gamma);
    r.staleness = max_staleness.load(std::memory_order_relaxed);
    trace.records.push_back(r);
    return *r.residual;
  };

  observe(0);

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker_fn, w);

  // Monitor: sample the (still moving) iterate every trace_every commits.
  std::uint64_t next_record = config.trace_every;
  while (true) {
    const std::uint64_t c = shared.committed();
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

  AsyncResult result{BlockVector(problem.layout), {}, {}};
  // After the join this snapshot is an exact, quiescent read.
  shared.snapshot({result.x.data(), result.x.size()});

  result.stats.per_worker.resize(workers);
  for (unsigned w = 0; w < workers; ++w) {
    result.stats.per_worker[w] = locals[w].updates;
    for (const auto& [s, c] : locals[w].histogram) {
      result.stats.histogram[s] += c;
      result.stats.max_observed = std::max(result.stats.max_observed, s);
    }
  }

  // Replace any mid-flight record at the final count with the exact one.
  const std::uint64_t fin = shared.committed();
  while (!trace.records.empty() && trace.records.back().k >= fin) trace.records.pop_back();
  observe(fin);
  trace.total_iters = shared.committed();
  trace.final_F = trace.records.back().F;
  trace.final_residual = *trace.records.back().residual;
  result.trace = std::move(trace);
  return result;
}

}  // namespace abcfb
