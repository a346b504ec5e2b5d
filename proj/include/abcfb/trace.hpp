#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace abcfb {

// One sampled point of a run. k counts committed block updates. Optional
// entries are left empty in the CSV when a run does not produce them.
struct TraceRecord {
  std::uint64_t k = 0;
  double F = 0.0;
  std::optional<double> residual;       // prox_grad_residual at x^k
  std::optional<double> lyapunov;       // F(x^k) + delay-corrected term
  std::optional<double> step_norm_sq;   // |x^k - x^{k-1}|^2, absent at k=0
  std::optional<std::uint64_t> staleness;  // observed read staleness (async) or max d^k (sim)
};

struct Trace {
  std::vector<TraceRecord> records;

  // Run metadata (echoed by the solvers; not part of the CSV payload).
  std::string problem;
  std::uint64_t seed = 0;
  unsigned tau = 0;
  std::uint64_t total_iters = 0;
  double final_F = 0.0;
  double final_residual = 0.0;
};

// CSV with the fixed header  k,F,residual,lyapunov,step_norm_sq,staleness
// Reals are written with shortest round-trip formatting; optionals are empty.
void write_trace_csv(std::ostream& os, const Trace& trace);
Trace read_trace_csv(std::istream& is);

}  // namespace abcfb
