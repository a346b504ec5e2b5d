#include "abcfb/problem.hpp"

#include <cmath>
#include <limits>

namespace abcfb {

void validate(const CompositeProblem& problem) {
  if (problem.layout.blocks() == 0) throw StructuralError("problem has no blocks");
  if (!problem.smooth_value || !problem.partial_gradient)
    throw StructuralError("problem is missing smooth oracles");
  if (!problem.nonsmooth_value || !problem.prox)
    throw StructuralError("problem is missing nonsmooth oracles");
  if (problem.lipschitz.block.size() != problem.layout.blocks())
    throw StructuralError("Lipschitz data does not match layout");
  double max_block = 0.0;
  for (double L : problem.lipschitz.block) {
    if (!(L > 0.0) || !std::isfinite(L))
      throw ParameterError("block Lipschitz constants must be positive and finite");
    max_block = std::max(max_block, L);
  }
  if (!(problem.lipschitz.residual > 0.0) || !std::isfinite(problem.lipschitz.residual))
    throw ParameterError("residual Lipschitz constant must be positive and finite");
  if (problem.lipschitz.residual < max_block * (1.0 - 1e-12))
    throw ParameterError("residual Lipschitz constant below a block constant");
}

double eval_F(const CompositeProblem& problem, const BlockVector& x) {
  if (x.layout() != problem.layout) throw StructuralError("iterate layout mismatch");
  double F = problem.smooth_value(x);
  for (std::size_t i = 0; i < problem.layout.blocks(); ++i) {
    F += problem.nonsmooth_value(i, x.block(i));
    if (std::isinf(F)) return F;
  }
  return F;
}

std::vector<double> partial_grad(const CompositeProblem& problem, const BlockVector& x,
                                 std::size_t i) {
  if (x.layout() != problem.layout) throw StructuralError("iterate layout mismatch");
  if (i >= problem.layout.blocks()) throw StructuralError("block index out of range");
  std::vector<double> g(problem.layout.dim(i));
  problem.partial_gradient(x, i, g);
  return g;
}

std::vector<double> prox_block(const CompositeProblem& problem, std::size_t i,
                               std::span<const double> v, double gamma) {
  if (i >= problem.layout.blocks()) throw StructuralError("block index out of range");
  if (v.size() != problem.layout.dim(i)) throw StructuralError("block size mismatch");
  if (!(gamma > 0.0)) throw ParameterError("prox stepsize must be positive");
  std::vector<double> out(v.size());
  problem.prox(i, v, gamma, out);
  return out;
}

double prox_grad_residual(const CompositeProblem& problem, const BlockVector& x,
                          const std::vector<double>& gamma) {
  if (x.layout() != problem.layout) throw StructuralError("iterate layout mismatch");
  if (gamma.size() != problem.layout.blocks())
    throw StructuralError("stepsize count does not match layout");

  std::vector<double> grad_full;
  if (problem.full_gradient) {
    grad_full.resize(problem.layout.total());
    problem.full_gradient(x, grad_full);
  }

  double s = 0.0;
  std::vector<double> g, v, pv;
  for (std::size_t i = 0; i < problem.layout.blocks(); ++i) {
    if (!(gamma[i] > 0.0)) throw ParameterError("stepsizes must be positive");
    const std::size_t d = problem.layout.dim(i);
    auto xi = x.block(i);
    v.resize(d);
    pv.resize(d);
    if (problem.full_gradient) {
      const double* gi = grad_full.data() + problem.layout.offset(i);
      for (std::size_t j = 0; j < d; ++j) v[j] = xi[j] - gamma[i] * gi[j];
    } else {
      g.resize(d);
      problem.partial_gradient(x, i, g);
      for (std::size_t j = 0; j < d; ++j) v[j] = xi[j] - gamma[i] * g[j];
    }
    problem.prox(i, v, gamma[i], pv);
    s += dist_sq(xi, pv) / gamma[i];
  }
  return std::sqrt(s);
}

void attach_zero_g(CompositeProblem& problem) {
  problem.nonsmooth_value = [](std::size_t, std::span<const double>) { return 0.0; };
  problem.prox = [](std::size_t, std::span<const double> v, double, std::span<double> out) {
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j];
  };
}

namespace {

double soft(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

void attach_l1_g(CompositeProblem& problem, double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("l1 weight must be nonnegative");
  problem.nonsmooth_value = [lambda](std::size_t, std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return lambda * s;
  };
  problem.prox = [lambda](std::size_t, std::span<const double> v, double gamma,
                          std::span<double> out) {
    const double t = lambda * gamma;
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = soft(v[j], t);
  };
}

void attach_box_g(CompositeProblem& problem, double lo, double hi) {
  if (!(lo <= hi)) throw ParameterError("box bounds out of order");
  problem.nonsmooth_value = [lo, hi](std::size_t, std::span<const double> v) {
    for (double x : v)
      if (x < lo || x > hi) return std::numeric_limits<double>::infinity();
    return 0.0;
  };
  problem.prox = [lo, hi](std::size_t, std::span<const double> v, double,
                          std::span<double> out) {
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = std::min(std::max(v[j], lo), hi);
  };
}

}  // namespace abcfb
