#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "abcfb/lasso.hpp"
#include "abcfb/ridge.hpp"
#include "abcfb/sim.hpp"
#include "abcfb/stepsize.hpp"

namespace abcfb {

// A full experiment description, readable/writable as flat key=value text
// grouped in [problem] / [algorithm] / [run] sections.
struct ExperimentSpec {
  // [problem]
  std::string problem = "lasso";  // lasso | ridge | quadratic
  std::size_t rows = 50;          // lasso: n; ridge: sample count m; quadratic: unused
  std::size_t cols = 100;         // lasso: block count m; ridge: feature dim; quadratic: block count
  double lambda = 0.1;            // l1 weight (lasso/quadratic) or ridge penalty
  std::uint64_t problem_seed = 1;
  std::string matrix_file;  // optional explicit data (A or X)
  std::string rhs_file;     // optional explicit right-hand side (b or y)

  // [algorithm]
  unsigned tau = 5;
  std::string delay = "per_block_uniform_iid";  // zero|constant:c|uniform_iid|per_block_uniform_iid|adversarial_max
  std::string rule = "theorem";                 // theorem | sublevel | manual
  std::vector<double> manual_gamma;             // required iff rule == manual
  double safety = 0.99;
  std::string mode = "sim";  // sim | async
  unsigned workers = 1;      // async mode only

  // [run]
  std::uint64_t seed = 0;
  std::uint64_t max_iters = 10000;
  std::uint64_t trace_every = 10;
  double tol = 0.0;
  std::uint64_t replications = 50;
  bool allow_unsafe = false;
  bool check_decomposition = false;
  std::string out = "trace";

  bool operator==(const ExperimentSpec&) const = default;
};

// Parses the key=value format; unknown keys or invalid ranges raise
// ParameterError naming the offending key. All defaults are pre-filled.
ExperimentSpec parse_experiment(std::istream& is);
ExperimentSpec parse_experiment_file(const std::string& path);

// Canonical emission; parse_experiment(emit_experiment(s)) == s.
void emit_experiment(std::ostream& os, const ExperimentSpec& spec);

// Semantic validation beyond per-key ranges (exclusivity rules etc.).
void validate_experiment(const ExperimentSpec& spec);

DelayModel parse_delay_model(const std::string& text, unsigned tau);

// The problem a spec describes, with the instance data kept alive.
struct BuiltProblem {
  std::string kind;
  std::optional<LassoInstance> lasso;
  std::optional<RidgeDualInstance> ridge;
  std::optional<CompositeProblem> quadratic;

  const CompositeProblem& problem() const;
};

BuiltProblem build_problem(const ExperimentSpec& spec);

// The solver configuration a spec describes (stepsizes resolved per rule).
SolverConfig build_config(const ExperimentSpec& spec, const CompositeProblem& problem);

struct ExperimentOutcome {
  std::vector<std::string> trace_files;
  std::vector<std::pair<std::string, std::string>> report;  // ordered key=value
};

// Executes all replications (seed, seed+1, ...), writes one trace CSV per
// replication under spec.out, and aggregates a report. Throws on rule
// violations or oracle failures; the CLI maps that to a nonzero exit.
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

// Cap applied to async worker counts when the ABCFB_THREADS env var is set.
unsigned effective_workers(unsigned requested);

}  // namespace abcfb
