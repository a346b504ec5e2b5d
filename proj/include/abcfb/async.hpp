#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <vector>

#include "abcfb/block.hpp"
#include "abcfb/problem.hpp"
#include "abcfb/sim.hpp"
#include "abcfb/trace.hpp"

namespace abcfb {

// Shared iterate for lock-free asynchronous updates: N scalar cells, each
// independently read/written with relaxed atomic operations (no torn scalars,
// no ordering between cells), plus a monotone counter of committed block
// updates. Readers may observe blocks mid-publication; that inconsistency is
// the intended read model.
class SharedIterate {
 public:
  explicit SharedIterate(const BlockVector& x0);

  std::size_t size() const { return cells_.size(); }

  double load(std::size_t j) const;
  void store(std::size_t j, double v);
  // Atomic x[j] += dv (compare-exchange loop); returns the new value.
  double fetch_add(std::size_t j, double dv);

  void snapshot(std::span<double> out) const;

  // Counter value observed at the start of a read (for staleness accounting).
  std::uint64_t begin_read() const;
  // Publish one committed update; returns the counter value before increment.
  std::uint64_t commit();
  std::uint64_t committed() const;

 private:
  std::vector<double> cells_;
  std::atomic<std::uint64_t> commits_{0};
};

// Empirical staleness of a finished run: for every committed update,
// counter_at_commit - counter_at_read_start.
struct StalenessStats {
  std::uint64_t max_observed = 0;
  std::map<std::uint64_t, std::uint64_t> histogram;
  std::vector<std::uint64_t> per_worker;  // update counts

  std::uint64_t total() const;
};

struct StalenessReport {
  std::uint64_t max = 0;
  double mean = 0.0;
  std::uint64_t p50 = 0, p90 = 0, p99 = 0;
  std::uint64_t total_updates = 0;
  unsigned assumed_tau = 0;
  bool assumption_held = true;  // max <= assumed_tau
};

StalenessReport measure_staleness(const StalenessStats& stats, unsigned assumed_tau);

struct AsyncResult {
  BlockVector x;
  StalenessStats stats;
  Trace trace;
};

// Multi-worker shared-memory execution: each worker repeatedly samples a
// block from its own generator stream, snapshots the shared scalars without
// coordination, computes the partial gradient at that (possibly inconsistent)
// snapshot, and commits prox_{gamma_i g_i}(x_i - gamma_i grad) to its block,
// scalar by scalar. Workers never block on each other; a monitor thread
// samples the trace and checks the residual stop. Runs until max_iters
// committed updates (or the residual stop fires).
//
// assumed_tau is the delay bound the stepsizes were derived with. It is an
// assumption, not enforced: the returned stats record what actually happened
// and measure_staleness flags violations after the fact. config.delay is
// ignored here (real interleaving supplies the delays). Reproducible only in
// distribution; only the final iterate (after quiescence) is an exact read.
AsyncResult run_async(const CompositeProblem& problem, const SolverConfig& config,
                      unsigned workers, unsigned assumed_tau);

}  // namespace abcfb
