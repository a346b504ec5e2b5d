#include "abcfb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "abcfb/errors.hpp"

namespace abcfb {

namespace {

double triangular_sum(std::span<const double> window, unsigned tau) {
  if (window.size() > tau) throw StructuralError("step window longer than tau");
  const std::size_t len = window.size();
  double s = 0.0;
  for (std::size_t j = 0; j < len; ++j) {
    const double weight = static_cast<double>(tau - len + 1 + j);
    s += weight * window[j];
  }
  return s;
}

}  // namespace

double alpha_k(std::span<const double> v_step_norms_sq, unsigned tau, double L_res_V,
               double p_max) {
  if (!(p_max > 0.0)) throw ParameterError("p_max must be positive");
  return L_res_V / (2.0 * std::sqrt(p_max)) * triangular_sum(v_step_norms_sq, tau);
}

double alpha_tilde_k(std::span<const double> step_norms_sq, unsigned tau, double L_res) {
  return L_res / 2.0 * triangular_sum(step_norms_sq, tau);
}

SublinearCheck check_sublinear(const Trace& trace, double F_star, double C_bound,
                               double W_dist0_sq) {
  if (trace.records.empty() || trace.records.front().k != 0)
    throw ContractError("sublinear check needs a trace starting at k = 0");
  const double F0 = trace.records.front().F;
  const double numerator = W_dist0_sq / 2.0 + C_bound * (F0 - F_star);

  SublinearCheck out;
  std::vector<double> k_gap;
  for (const TraceRecord& r : trace.records) {
    if (r.k == 0) continue;
    const double gap = r.F - F_star;
    const double bound = numerator / static_cast<double>(r.k);
    ++out.checked;
    if (gap > bound) ++out.violations;
    if (bound > 0.0) out.max_ratio = std::max(out.max_ratio, gap / bound);
    const double kg = static_cast<double>(r.k) * gap;
    out.sublinear_constant = std::max(out.sublinear_constant, kg);
    k_gap.push_back(kg);
  }
  if (k_gap.size() >= 10) {
    const std::size_t decile = k_gap.size() / 10;
    double first = 0.0, last = 0.0;
    for (std::size_t j = 0; j < decile; ++j) {
      first += k_gap[j];
      last += k_gap[k_gap.size() - decile + j];
    }
    out.trend_ok = last < first;
  }
  return out;
}

std::optional<double> fit_linear_rate(const Trace& trace, double F_star, unsigned tau) {
  // Ordinary least squares of log(gap) on t = floor(k/(tau+1)).
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t n = 0;
  for (const TraceRecord& r : trace.records) {
    const double gap = r.F - F_star;
    if (!(gap > 0.0) || !std::isfinite(gap)) continue;
    const double t = static_cast<double>(r.k / (tau + 1ull));
    const double y = std::log(gap);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double denom = static_cast<double>(n) * stt - st * st;
  if (denom == 0.0) return std::nullopt;
  const double slope = (static_cast<double>(n) * sty - st * sy) / denom;
  return std::exp(slope);
}

std::size_t count_lyapunov_violations(const Trace& trace, double tol) {
  std::size_t violations = 0;
  bool have_prev = false;
  double prev = 0.0;
  for (const TraceRecord& r : trace.records) {
    if (!r.lyapunov) continue;
    if (have_prev && *r.lyapunov > prev + tol) ++violations;
    prev = *r.lyapunov;
    have_prev = true;
  }
  return violations;
}

RateReport rate_report(const Trace& trace, double F_star, unsigned tau,
                       std::optional<double> theory_rho) {
  if (trace.records.empty()) throw ContractError("empty trace");
  RateReport rep;
  for (const TraceRecord& r : trace.records)
    if (r.k >= 1)
      rep.sublinear_constant =
          std::max(rep.sublinear_constant, static_cast<double>(r.k) * (r.F - F_star));
  rep.fitted_rho = fit_linear_rate(trace, F_star, tau);
  rep.theory_rho = theory_rho;
  const double tol = 1e-10 * (1.0 + std::abs(trace.records.front().F));
  rep.monotone_violations = count_lyapunov_violations(trace, tol);
  return rep;
}

Trace average_traces(const std::vector<Trace>& traces) {
  if (traces.empty()) throw StructuralError("no traces to average");
  const std::size_t rows = traces.front().records.size();
  for (const Trace& t : traces)
    if (t.records.size() != rows)
      throw StructuralError("replication traces have different lengths");

  Trace mean = traces.front();
  mean.problem = traces.front().problem;
  const double inv = 1.0 / static_cast<double>(traces.size());
  for (std::size_t j = 0; j < rows; ++j) {
    TraceRecord& out = mean.records[j];
    double F = 0.0;
    bool all_res = true, all_ly = true, all_sn = true;
    double res = 0.0, ly = 0.0, sn = 0.0;
    for (const Trace& t : traces) {
      const TraceRecord& r = t.records[j];
      if (r.k != out.k) throw StructuralError("replication traces are on different grids");
      F += r.F;
      if (r.residual) res += *r.residual; else all_res = false;
      if (r.lyapunov) ly += *r.lyapunov; else all_ly = false;
      if (r.step_norm_sq) sn += *r.step_norm_sq; else all_sn = false;
    }
    out.F = F * inv;
    out.residual = all_res ? std::optional<double>(res * inv) : std::nullopt;
    out.lyapunov = all_ly ? std::optional<double>(ly * inv) : std::nullopt;
    out.step_norm_sq = all_sn ? std::optional<double>(sn * inv) : std::nullopt;
    out.staleness.reset();
  }
  return mean;
}

ReferenceSolution estimate_F_star(const CompositeProblem& problem, double tol,
                                  std::uint64_t max_iters, const BlockVector* start) {
  validate(problem);
  if (!(tol > 0.0)) throw ParameterError("reference tolerance must be positive");

  const double gamma_ref = 1.0 / problem.lipschitz.residual;
  const std::vector<double> gamma(problem.layout.blocks(), gamma_ref);

  BlockVector x = start ? *start : BlockVector(problem.layout);
  if (start && start->layout() != problem.layout)
    throw StructuralError("reference start has wrong layout");

  std::vector<double> grad(problem.layout.total());
  std::vector<double> v, px;
  ReferenceSolution ref;
  for (std::uint64_t it = 0; it <= max_iters; ++it) {
    const double residual = prox_grad_residual(problem, x, gamma);
    if (residual <= tol) {
      ref.x = x;
      ref.F_star = eval_F(problem, x);
      ref.residual = residual;
      ref.iterations = it;
      ref.method = "proximal-gradient-reference";
      return ref;
    }
    if (it == max_iters) break;

    if (problem.full_gradient) {
      problem.full_gradient(x, grad);
    } else {
      for (std::size_t i = 0; i < problem.layout.blocks(); ++i) {
        std::span<double> gi(grad.data() + problem.layout.offset(i), problem.layout.dim(i));
        problem.partial_gradient(x, i, gi);
      }
    }
    for (std::size_t i = 0; i < problem.layout.blocks(); ++i) {
      const std::size_t off = problem.layout.offset(i);
      const std::size_t d = problem.layout.dim(i);
      v.resize(d);
      px.resize(d);
      auto xi = x.block(i);
      for (std::size_t j = 0; j < d; ++j) v[j] = xi[j] - gamma_ref * grad[off + j];
      problem.prox(i, v, gamma_ref, px);
      x.set_block(i, px);
    }
  }
  throw Error("reference solve did not reach the requested tolerance");
}

}  // namespace abcfb
