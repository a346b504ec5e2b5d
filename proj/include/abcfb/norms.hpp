#pragma once

#include <cmath>
#include <vector>

#include "abcfb/block.hpp"
#include "abcfb/errors.hpp"

namespace abcfb {

// Per-block positive weights a_i defining the squared norm
//   |x|_A^2 = sum_i a_i |x_i|^2
// where |x_i| is the Euclidean norm of block i.
struct WeightVector {
  std::vector<double> w;

  explicit WeightVector(std::vector<double> weights) : w(std::move(weights)) {
    if (w.empty()) throw StructuralError("weight vector is empty");
    for (double v : w)
      if (!(v > 0.0)) throw ParameterError("block weights must be positive");
  }
};

// Weights p_i (probability-weighted norm).
inline WeightVector probability_weights(const std::vector<double>& p) {
  return WeightVector(p);
}

// Weights 1/gamma_i (inverse-stepsize norm).
inline WeightVector inverse_stepsize_weights(const std::vector<double>& gamma) {
  std::vector<double> w(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (!(gamma[i] > 0.0)) throw ParameterError("stepsizes must be positive");
    w[i] = 1.0 / gamma[i];
  }
  return WeightVector(std::move(w));
}

// Weights 1/(gamma_i p_i), the geometry in which sublinear distances are
// measured.
inline WeightVector inverse_stepsize_probability_weights(const std::vector<double>& gamma,
                                                         const std::vector<double>& p) {
  if (gamma.size() != p.size()) throw StructuralError("stepsize/probability size mismatch");
  std::vector<double> w(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (!(gamma[i] > 0.0) || !(p[i] > 0.0))
      throw ParameterError("stepsizes and probabilities must be positive");
    w[i] = 1.0 / (gamma[i] * p[i]);
  }
  return WeightVector(std::move(w));
}

inline double weighted_norm_sq(const BlockVector& x, const WeightVector& a) {
  if (a.w.size() != x.blocks()) throw StructuralError("weight count does not match layout");
  double s = 0.0;
  for (std::size_t i = 0; i < x.blocks(); ++i) s += a.w[i] * norm_sq(x.block(i));
  return s;
}

inline double weighted_dist_sq(const BlockVector& x, const BlockVector& y,
                               const WeightVector& a) {
  if (x.layout() != y.layout()) throw StructuralError("layout mismatch");
  if (a.w.size() != x.blocks()) throw StructuralError("weight count does not match layout");
  double s = 0.0;
  for (std::size_t i = 0; i < x.blocks(); ++i) s += a.w[i] * dist_sq(x.block(i), y.block(i));
  return s;
}

}  // namespace abcfb
