#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "abcfb/block.hpp"
#include "abcfb/errors.hpp"

namespace abcfb {

// Smoothness metadata for F = f + sum_i g_i: per-block constants L_i for the
// partial gradients, and a single residual constant L_res coupling blocks
// (Lipschitz constant of the full gradient restricted to single-block
// perturbations). L_res >= max_i L_i always holds for consistent data.
struct LipschitzData {
  std::vector<double> block;  // L_i, one per block, > 0
  double residual = 0.0;      // L_res
};

// Composite objective F(x) = f(x) + sum_i g_i(x_i) described through oracles.
//
// f is convex with block-Lipschitz partial gradients; each g_i is convex,
// lower semicontinuous, and accessed only through its proximity operator.
struct CompositeProblem {
  BlockLayout layout;
  LipschitzData lipschitz;
  std::string name;

  // f(x)
  std::function<double(const BlockVector&)> smooth_value;

  // grad_i f(x), written into out (out.size() == layout.dim(i))
  std::function<void(const BlockVector&, std::size_t, std::span<double>)> partial_gradient;

  // grad f(x), written into out (out.size() == layout.total()). Optional
  // fast path; when absent, residual computations loop over partial_gradient.
  std::function<void(const BlockVector&, std::span<double>)> full_gradient;

  // g_i(v) for a candidate block value v; may return +infinity (indicators)
  std::function<double(std::size_t, std::span<const double>)> nonsmooth_value;

  // prox_{gamma g_i}(v), written into out
  std::function<void(std::size_t, std::span<const double>, double, std::span<double>)> prox;
};

// Throws StructuralError/ParameterError if the problem is malformed
// (missing oracles, Lipschitz data inconsistent with the layout).
void validate(const CompositeProblem& problem);

// F(x) = f(x) + sum_i g_i(x_i). May return +infinity.
double eval_F(const CompositeProblem& problem, const BlockVector& x);

// grad_i f(x) as a fresh vector.
std::vector<double> partial_grad(const CompositeProblem& problem, const BlockVector& x,
                                 std::size_t i);

// prox_{gamma g_i}(v) as a fresh vector. gamma > 0.
std::vector<double> prox_block(const CompositeProblem& problem, std::size_t i,
                               std::span<const double> v, double gamma);

// Blockwise fixed-point residual of the forward-backward map in the
// inverse-stepsize geometry:
//
//   sqrt( sum_i (1/gamma_i) | x_i - prox_{gamma_i g_i}(x_i - gamma_i grad_i f(x)) |^2 )
//
// Zero exactly at minimizers of F.
double prox_grad_residual(const CompositeProblem& problem, const BlockVector& x,
                          const std::vector<double>& gamma);

// Attach one of the built-in nonsmooth terms to a problem (fills
// nonsmooth_value and prox).

// g_i = 0: prox is the identity.
void attach_zero_g(CompositeProblem& problem);

// g_i(v) = lambda * |v|_1, lambda >= 0: prox is soft thresholding.
void attach_l1_g(CompositeProblem& problem, double lambda);

// g_i = indicator of the box [lo, hi]^dim: prox is the projection.
void attach_box_g(CompositeProblem& problem, double lo, double hi);

}  // namespace abcfb
