#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "abcfb/errors.hpp"
#include "abcfb/problem.hpp"

namespace abcfb {

// Block selection probabilities p_i. Validated on construction: every entry
// strictly positive and the total equal to one within 1e-12.
class BlockProbabilities {
 public:
  explicit BlockProbabilities(std::vector<double> p);
  static BlockProbabilities uniform(std::size_t m);

  const std::vector<double>& values() const { return p_; }
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  double min() const { return min_; }
  double max() const { return max_; }

 private:
  std::vector<double> p_;
  double min_ = 0.0, max_ = 0.0;
};

enum class StepsizeRule { theorem, sublevel, manual };

// Per-block stepsizes gamma_i together with the rule that produced them.
struct StepsizeSchedule {
  std::vector<double> gamma;
  StepsizeRule rule = StepsizeRule::manual;
  double safety = 1.0;

  double max() const;
};

// The contraction margin
//
//   delta = max_i ( L_i gamma_i + 2 gamma_i tau L_res p_max / sqrt(p_min) ).
//
// All convergence guarantees require delta < 2.
double compute_delta(const StepsizeSchedule& gamma, const LipschitzData& L,
                     const BlockProbabilities& p, unsigned tau);

// Largest admissible stepsizes for the requested rule, backed off by the
// multiplicative safety factor in (0,1):
//
//   theorem:  gamma_i = safety * 2 / (L_i + 2 tau L_res p_max / sqrt(p_min))
//   sublevel: gamma_i = safety * 2 / (L_i + 2 tau L_res)
//
// The theorem rule guarantees the sublinear/linear rates; the sublevel rule
// additionally makes F(x^k) plus its delay correction monotone along every
// realization (useful when error bounds only hold on sublevel sets).
StepsizeSchedule max_stepsizes(StepsizeRule rule, const LipschitzData& L,
                               const BlockProbabilities& p, unsigned tau,
                               double safety = 0.99);

// Constants appearing in the convergence guarantees. kappa, theta and
// linear_factor depend on the error-bound constant C_{X} of the problem in the
// inverse-stepsize geometry; when that constant is unknown they are absent.
struct RateConstants {
  double delta = 0.0;
  double C_bound = 0.0;  // sublinear-rate constant (an upper bound, not tight)
  std::optional<double> eb_constant;
  std::optional<double> kappa;
  std::optional<double> theta;
  std::optional<double> linear_factor;  // 1 - p_min/(kappa+theta)
};

RateConstants rate_constants(double delta, const BlockProbabilities& p, unsigned tau,
                             const LipschitzData& L, const StepsizeSchedule& gamma,
                             std::optional<double> eb_constant = std::nullopt);

}  // namespace abcfb
