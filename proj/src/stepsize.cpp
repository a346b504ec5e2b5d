#include "abcfb/stepsize.hpp"

#include <algorithm>
#include <cmath>

namespace abcfb {

BlockProbabilities::BlockProbabilities(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw StructuralError("probability vector is empty");
  double sum = 0.0;
  min_ = p_.front();
  max_ = p_.front();
  for (double v : p_) {
    if (!(v > 0.0) || v > 1.0) throw ParameterError("block probabilities must lie in (0,1]");
    sum += v;
    min_ = std::min(min_, v);
    max_ = std::max(max_, v);
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ParameterError("block probabilities must sum to one");
}

BlockProbabilities BlockProbabilities::uniform(std::size_t m) {
  if (m == 0) throw StructuralError("need at least one block");
  return BlockProbabilities(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

double StepsizeSchedule::max() const {
  if (gamma.empty()) throw StructuralError("empty stepsize schedule");
  return *std::max_element(gamma.begin(), gamma.end());
}

namespace {

void check_sizes(const StepsizeSchedule& gamma, const LipschitzData& L,
                 const BlockProbabilities& p) {
  if (gamma.gamma.size() != L.block.size() || L.block.size() != p.size())
    throw StructuralError("stepsize/Lipschitz/probability size mismatch");
}

}  // namespace

double compute_delta(const StepsizeSchedule& gamma, const LipschitzData& L,
                     const BlockProbabilities& p, unsigned tau) {
  check_sizes(gamma, L, p);
  const double coupling = 2.0 * static_cast<double>(tau) * L.residual * p.max() / std::sqrt(p.min());
  double delta = 0.0;
  for (std::size_t i = 0; i < L.block.size(); ++i)
    delta = std::max(delta, gamma.gamma[i] * (L.block[i] + coupling));
  return delta;
}

StepsizeSchedule max_stepsizes(StepsizeRule rule, const LipschitzData& L,
                               const BlockProbabilities& p, unsigned tau, double safety) {
  if (!(safety > 0.0) || !(safety < 1.0))
    throw ParameterError("safety factor must lie strictly in (0,1)");
  if (L.block.size() != p.size())
    throw StructuralError("Lipschitz/probability size mismatch");
  if (rule == StepsizeRule::manual)
    throw ParameterError("manual schedules are supplied, not computed");

  const double coupling =
      rule == StepsizeRule::theorem
          ? 2.0 * static_cast<double>(tau) * L.residual * p.max() / std::sqrt(p.min())
          : 2.0 * static_cast<double>(tau) * L.residual;

  StepsizeSchedule s;
  s.rule = rule;
  s.safety = safety;
  s.gamma.resize(L.block.size());
  for (std::size_t i = 0; i < L.block.size(); ++i) {
    if (!(L.block[i] > 0.0)) throw ParameterError("Lipschitz constants must be positive");
    s.gamma[i] = safety * 2.0 / (L.block[i] + coupling);
  }
  return s;
}

RateConstants rate_constants(double delta, const BlockProbabilities& p, unsigned tau,
                             const LipschitzData& L, const StepsizeSchedule& gamma,
                             std::optional<double> eb_constant) {
  if (gamma.gamma.size() != p.size()) throw StructuralError("stepsize/probability size mismatch");
  if (!(delta < 2.0))
    throw RuleViolationError("contraction margin delta must be < 2 for rate constants");

  const double t = static_cast<double>(tau);
  const double sqrt_pmin = std::sqrt(p.min());

  RateConstants rc;
  rc.delta = delta;
  rc.C_bound = std::max(1.0, 1.0 / (2.0 - delta)) / p.min() - 1.0 +
               t * (1.0 + p.max() / sqrt_pmin) / (sqrt_pmin * (2.0 - delta));
  if (eb_constant) {
    if (!(*eb_constant > 0.0)) throw ParameterError("error-bound constant must be positive");
    rc.eb_constant = eb_constant;
    rc.kappa = std::max(1.0, 2.0 * (*eb_constant) / (2.0 - delta));
    rc.theta = t * L.residual * gamma.max() / (2.0 - delta) *
               (p.max() * p.max() / sqrt_pmin + 1.0);
    rc.linear_factor = 1.0 - p.min() / (*rc.kappa + *rc.theta);
  }
  return rc;
}

}  // namespace abcfb
