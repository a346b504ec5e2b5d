#include "abcfb/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "abcfb/async.hpp"
#include "abcfb/diagnostics.hpp"
#include "abcfb/errors.hpp"
#include "abcfb/matrix_io.hpp"
#include "abcfb/quadratic.hpp"
#include "abcfb/rng.hpp"
#include "abcfb/trace.hpp"

namespace abcfb {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ParameterError("invalid value for key " + key + ": '" + value + "'");
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) bad_value(key, value);
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last || !std::isfinite(out)) bad_value(key, value);
  return out;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  bad_value(key, value);
}

std::vector<double> parse_real_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  if (value.empty()) return out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    std::size_t comma = value.find(',', pos);
    std::string item = trim(value.substr(pos, comma == std::string::npos
                                                  ? std::string::npos
                                                  : comma - pos));
    out.push_back(parse_real(key, item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_real_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_real(v[i]);
  }
  return out;
}

Eigen::VectorXd read_column_file(const std::string& key, const std::string& path) {
  Eigen::MatrixXd M = read_dense_matrix_file(path);
  if (M.cols() != 1) {
    throw ParameterError("key " + key + ": expected a single-column matrix in " + path);
  }
  return M.col(0);
}

}  // namespace

ExperimentSpec parse_experiment(std::istream& is) {
  ExperimentSpec spec;
  static const std::set<std::string> kSections = {"problem", "algorithm", "run"};
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']') {
        throw ParameterError("malformed section header at line " + std::to_string(lineno));
      }
      std::string section = trim(s.substr(1, s.size() - 2));
      if (!kSections.count(section)) throw ParameterError("unknown section: " + section);
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ParameterError("expected key = value at line " + std::to_string(lineno));
    }
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ParameterError("empty key at line " + std::to_string(lineno));
    if (!seen.insert(key).second) throw ParameterError("duplicate key: " + key);

    if (key == "problem") spec.problem = value;
    else if (key == "rows") spec.rows = parse_int<std::size_t>(key, value);
    else if (key == "cols") spec.cols = parse_int<std::size_t>(key, value);
    else if (key == "lambda") spec.lambda = parse_real(key, value);
    else if (key == "problem_seed") spec.problem_seed = parse_int<std::uint64_t>(key, value);
    else if (key == "matrix_file") spec.matrix_file = value;
    else if (key == "rhs_file") spec.rhs_file = value;
    else if (key == "tau") spec.tau = parse_int<unsigned>(key, value);
    else if (key == "delay") spec.delay = value;
    else if (key == "rule") spec.rule = value;
    else if (key == "manual_gamma") spec.manual_gamma = parse_real_list(key, value);
    else if (key == "safety") spec.safety = parse_real(key, value);
    else if (key == "mode") spec.mode = value;
    else if (key == "workers") spec.workers = parse_int<unsigned>(key, value);
    else if (key == "seed") spec.seed = parse_int<std::uint64_t>(key, value);
    else if (key == "max_iters") spec.max_iters = parse_int<std::uint64_t>(key, value);
    else if (key == "trace_every") spec.trace_every = parse_int<std::uint64_t>(key, value);
    else if (key == "tol") spec.tol = parse_real(key, value);
    else if (key == "replications") spec.replications = parse_int<std::uint64_t>(key, value);
    else if (key == "allow_unsafe") spec.allow_unsafe = parse_flag(key, value);
    else if (key == "check_decomposition") spec.check_decomposition = parse_flag(key, value);
    else if (key == "out") spec.out = value;
    else throw ParameterError("unknown key: " + key);
  }
  validate_experiment(spec);
  return spec;
}

ExperimentSpec parse_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config file: " + path);
  return parse_experiment(in);
}

void emit_experiment(std::ostream& os, const ExperimentSpec& spec) {
  os << "[problem]\n";
  os << "problem = " << spec.problem << "\n";
  os << "rows = " << spec.rows << "\n";
  os << "cols = " << spec.cols << "\n";
  os << "lambda = " << format_real(spec.lambda) << "\n";
  os << "problem_seed = " << spec.problem_seed << "\n";
  os << "matrix_file = " << spec.matrix_file << "\n";
  os << "rhs_file = " << spec.rhs_file << "\n";
  os << "\n[algorithm]\n";
  os << "tau = " << spec.tau << "\n";
  os << "delay = " << spec.delay << "\n";
  os << "rule = " << spec.rule << "\n";
  os << "manual_gamma = " << format_real_list(spec.manual_gamma) << "\n";
  os << "safety = " << format_real(spec.safety) << "\n";
  os << "mode = " << spec.mode << "\n";
  os << "workers = " << spec.workers << "\n";
  os << "\n[run]\n";
  os << "seed = " << spec.seed << "\n";
  os << "max_iters = " << spec.max_iters << "\n";
  os << "trace_every = " << spec.trace_every << "\n";
  os << "tol = " << format_real(spec.tol) << "\n";
  os << "replications = " << spec.replications << "\n";
  os << "allow_unsafe = " << (spec.allow_unsafe ? "true" : "false") << "\n";
  os << "check_decomposition = " << (spec.check_decomposition ? "true" : "false") << "\n";
  os << "out = " << spec.out << "\n";
}

DelayModel parse_delay_model(const std::string& text, unsigned tau) {
  if (text == "zero") return DelayModel::zero();
  if (text == "uniform_iid") return DelayModel::uniform(tau);
  if (text == "per_block_uniform_iid") return DelayModel::per_block_uniform(tau);
  if (text == "adversarial_max") return DelayModel::adversarial(tau);
  if (text.rfind("constant:", 0) == 0) {
    unsigned c = parse_int<unsigned>("delay", text.substr(9));
    return DelayModel::constant(c, tau);
  }
  bad_value("delay", text);
}

void validate_experiment(const ExperimentSpec& spec) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ParameterError(msg);
  };
  require(spec.problem == "lasso" || spec.problem == "ridge" || spec.problem == "quadratic",
          "invalid value for key problem: '" + spec.problem + "'");
  require(spec.mode == "sim" || spec.mode == "async",
          "invalid value for key mode: '" + spec.mode + "'");
  require(spec.rule == "theorem" || spec.rule == "sublevel" || spec.rule == "manual",
          "invalid value for key rule: '" + spec.rule + "'");
  if (spec.rule == "manual") {
    require(!spec.manual_gamma.empty(), "key manual_gamma: required when rule = manual");
    for (double g : spec.manual_gamma) {
      require(std::isfinite(g) && g > 0.0, "key manual_gamma: entries must be positive");
    }
  } else {
    require(spec.manual_gamma.empty(),
            "key manual_gamma: conflicts with rule = " + spec.rule);
  }
  require(spec.safety > 0.0 && spec.safety < 1.0, "key safety: must lie in (0, 1)");
  require(spec.rows >= 1, "key rows: must be at least 1");
  require(spec.cols >= 1, "key cols: must be at least 1");
  require(std::isfinite(spec.lambda) && spec.lambda >= 0.0, "key lambda: must be nonnegative");
  require(spec.workers >= 1, "key workers: must be at least 1");
  require(spec.max_iters >= 1, "key max_iters: must be at least 1");
  require(spec.trace_every >= 1, "key trace_every: must be at least 1");
  require(spec.replications >= 1, "key replications: must be at least 1");
  require(std::isfinite(spec.tol) && spec.tol >= 0.0, "key tol: must be nonnegative");
  require(spec.matrix_file.empty() == spec.rhs_file.empty(),
          "keys matrix_file/rhs_file: must be given together");
  if (spec.problem == "quadratic") {
    require(spec.matrix_file.empty(), "key matrix_file: not used by problem = quadratic");
  }
  parse_delay_model(spec.delay, spec.tau);  // range-checks constant:c against tau
}

const CompositeProblem& BuiltProblem::problem() const {
  if (lasso) return lasso->problem;
  if (ridge) return ridge->problem;
  if (quadratic) return *quadratic;
  throw ContractError("BuiltProblem holds no instance");
}

BuiltProblem build_problem(const ExperimentSpec& spec) {
  BuiltProblem built;
  built.kind = spec.problem;
  if (spec.problem == "lasso") {
    if (!spec.matrix_file.empty()) {
      Eigen::MatrixXd A = read_dense_matrix_file(spec.matrix_file);
      Eigen::VectorXd b = read_column_file("rhs_file", spec.rhs_file);
      built.lasso = make_lasso(std::move(A), std::move(b), spec.lambda);
    } else {
      built.lasso = random_lasso(spec.rows, spec.cols, spec.lambda, spec.problem_seed,
                                 std::min<std::size_t>(10, spec.cols));
    }
  } else if (spec.problem == "ridge") {
    if (!spec.matrix_file.empty()) {
      Eigen::MatrixXd X = read_dense_matrix_file(spec.matrix_file);
      Eigen::VectorXd y = read_column_file("rhs_file", spec.rhs_file);
      built.ridge = make_ridge_dual(std::move(X), std::move(y), spec.lambda);
    } else {
      built.ridge = random_ridge(spec.rows, spec.cols, spec.lambda, spec.problem_seed);
    }
  } else {
    // Separable quadratic with seeded curvatures in [0.5, 2.5) and linear
    // terms in [-1, 1); lambda > 0 adds an l1 part so the prox is exercised.
    CounterRng rng(spec.problem_seed, 31);
    std::vector<double> q(spec.cols), b(spec.cols);
    for (std::size_t j = 0; j < spec.cols; ++j) {
      q[j] = 0.5 + 2.0 * rng.next_unit();
      b[j] = 2.0 * rng.next_unit() - 1.0;
    }
    built.quadratic = make_diag_quadratic(BlockLayout::scalars(spec.cols),
                                          std::move(q), std::move(b));
    built.quadratic->name = "quadratic";
    if (spec.lambda > 0.0) attach_l1_g(*built.quadratic, spec.lambda);
  }
  return built;
}

SolverConfig build_config(const ExperimentSpec& spec, const CompositeProblem& problem) {
  const std::size_t m = problem.layout.blocks();
  BlockProbabilities p = BlockProbabilities::uniform(m);
  StepsizeSchedule schedule;
  if (spec.rule == "manual") {
    if (spec.manual_gamma.size() != m) {
      throw ParameterError("key manual_gamma: expected " + std::to_string(m) +
                           " entries, got " + std::to_string(spec.manual_gamma.size()));
    }
    schedule = StepsizeSchedule{spec.manual_gamma, StepsizeRule::manual, 1.0};
  } else {
    StepsizeRule rule =
        spec.rule == "theorem" ? StepsizeRule::theorem : StepsizeRule::sublevel;
    schedule = max_stepsizes(rule, problem.lipschitz, p, spec.tau, spec.safety);
  }
  return SolverConfig{std::move(p),
                      std::move(schedule),
                      parse_delay_model(spec.delay, spec.tau),
                      spec.seed,
                      spec.max_iters,
                      spec.tol,
                      spec.trace_every,
                      spec.allow_unsafe,
                      spec.check_decomposition};
}

unsigned effective_workers(unsigned requested) {
  const char* env = std::getenv("ABCFB_THREADS");
  if (!env || !*env) return requested;
  unsigned cap = parse_int<unsigned>("ABCFB_THREADS", env);
  if (cap == 0) throw ParameterError("invalid value for key ABCFB_THREADS: '0'");
  return std::min(requested, cap);
}

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  validate_experiment(spec);
  BuiltProblem built = build_problem(spec);
  const CompositeProblem& problem = built.problem();
  SolverConfig base = build_config(spec, problem);

  ExperimentOutcome outcome;
  auto& report = outcome.report;
  auto put = [&report](const std::string& key, const std::string& value) {
    report.emplace_back(key, value);
  };
  put("problem", problem.name);
  put("blocks", std::to_string(problem.layout.blocks()));
  put("mode", spec.mode);
  put("rule", spec.rule);
  put("tau", std::to_string(spec.tau));
  if (spec.mode == "async") put("workers", std::to_string(effective_workers(spec.workers)));
  const double delta =
      compute_delta(base.stepsizes, problem.lipschitz, base.probabilities, spec.tau);
  put("delta", format_real(delta));
  put("gamma_max", format_real(base.stepsizes.max()));
  if (delta < 2.0) {
    RateConstants rc = rate_constants(delta, base.probabilities, spec.tau,
                                      problem.lipschitz, base.stepsizes);
    put("C_bound", format_real(rc.C_bound));
  }

  // Independent reference objective for the rate diagnostics.
  std::optional<double> F_star;
  if (built.ridge) {
    ReferenceSolution ref = ridge_dual_reference(*built.ridge);
    F_star = ref.F_star;
    put("F_star", format_real(ref.F_star));
    put("F_star_method", ref.method);
  } else {
    try {
      ReferenceSolution ref = estimate_F_star(problem, 1e-10);
      F_star = ref.F_star;
      put("F_star", format_real(ref.F_star));
      put("F_star_method", ref.method);
    } catch (const Error& e) {
      put("F_star_note", e.what());
    }
  }

  const std::filesystem::path out_base(spec.out);
  if (out_base.has_parent_path()) {
    std::filesystem::create_directories(out_base.parent_path());
  }

  const unsigned workers = effective_workers(spec.workers);
  std::vector<Trace> traces;
  double final_F_sum = 0.0, final_F_min = std::numeric_limits<double>::infinity();
  double final_res_sum = 0.0;
  double rho_sum = 0.0;
  std::size_t rho_count = 0;
  std::size_t violations = 0;
  double sublinear_max = 0.0;
  std::uint64_t staleness_max = 0;
  double staleness_mean_sum = 0.0;
  bool tau_held = true;

  for (std::uint64_t rep = 0; rep < spec.replications; ++rep) {
    SolverConfig cfg = base;
    cfg.seed = spec.seed + rep;
    Trace trace;
    if (spec.mode == "async") {
      AsyncResult r = built.ridge
                          ? run_ridge_async(*built.ridge, cfg, workers, spec.tau)
                          : run_async(problem, cfg, workers, spec.tau);
      StalenessReport sr = measure_staleness(r.stats, spec.tau);
      staleness_max = std::max(staleness_max, sr.max);
      staleness_mean_sum += sr.mean;
      tau_held = tau_held && sr.assumption_held;
      trace = std::move(r.trace);
    } else {
      const bool tracked_ridge =
          built.ridge && base.delay.kind != DelayKind::per_block_uniform_iid;
      SimResult r = tracked_ridge ? run_ridge_sim(*built.ridge, cfg)
                                  : run_sim(problem, cfg);
      trace = std::move(r.trace);
    }

    final_F_sum += trace.final_F;
    final_F_min = std::min(final_F_min, trace.final_F);
    final_res_sum += trace.final_residual;
    if (F_star) {
      RateReport rr = rate_report(trace, *F_star, spec.tau);
      if (rr.fitted_rho) {
        rho_sum += *rr.fitted_rho;
        ++rho_count;
      }
      violations += rr.monotone_violations;
      sublinear_max = std::max(sublinear_max, rr.sublinear_constant);
    } else {
      violations += count_lyapunov_violations(
          trace, 1e-10 * (1.0 + std::abs(trace.records.front().F)));
    }

    std::string path = spec.out + "_r" + std::to_string(rep) + ".csv";
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open trace output file: " + path);
    write_trace_csv(os, trace);
    outcome.trace_files.push_back(path);
    traces.push_back(std::move(trace));
  }

  const double n = static_cast<double>(spec.replications);
  put("replications", std::to_string(spec.replications));
  put("final_F_mean", format_real(final_F_sum / n));
  put("final_F_min", format_real(final_F_min));
  put("final_residual_mean", format_real(final_res_sum / n));
  if (rho_count) put("fitted_rho_mean", format_real(rho_sum / rho_count));
  if (F_star) put("sublinear_constant_max", format_real(sublinear_max));
  put("monotone_violations_total", std::to_string(violations));
  if (spec.mode == "async") {
    put("staleness_max", std::to_string(staleness_max));
    put("staleness_mean", format_real(staleness_mean_sum / n));
    put("tau_assumption_held", tau_held ? "true" : "false");
  }

  // Mean objective curve across replications, when the grids agree (sim runs
  // without a residual stop always do).
  bool same_grid = spec.replications > 1;
  for (std::size_t r = 1; same_grid && r < traces.size(); ++r) {
    same_grid = traces[r].records.size() == traces[0].records.size();
    for (std::size_t j = 0; same_grid && j < traces[0].records.size(); ++j) {
      same_grid = traces[r].records[j].k == traces[0].records[j].k;
    }
  }
  if (same_grid && F_star) {
    Trace mean = average_traces(traces);
    if (auto rho = fit_linear_rate(mean, *F_star, spec.tau)) {
      put("fitted_rho_mean_curve", format_real(*rho));
    }
  }

  std::string report_path = spec.out + "_report.txt";
  std::ofstream rs(report_path, std::ios::binary);
  if (!rs) throw Error("cannot open report output file: " + report_path);
  for (const auto& [k, v] : report) rs << k << "=" << v << "\n";
  outcome.trace_files.push_back(report_path);
  return outcome;
}

}  // namespace abcfb
