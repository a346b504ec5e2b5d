#include "abcfb/quadratic.hpp"

#include <algorithm>
#include <memory>

namespace abcfb {

CompositeProblem make_diag_quadratic(BlockLayout layout, std::vector<double> q,
                                     std::vector<double> b) {
  if (q.size() != layout.total() || b.size() != layout.total())
    throw StructuralError("coefficient size does not match layout");
  for (double v : q)
    if (!(v > 0.0)) throw ParameterError("quadratic coefficients must be positive");

  struct Data {
    std::vector<double> q, b;
  };
  auto d = std::make_shared<const Data>(Data{std::move(q), std::move(b)});

  CompositeProblem p;
  p.layout = std::move(layout);
  p.name = "quadratic";
  p.lipschitz.block.resize(p.layout.blocks());
  for (std::size_t i = 0; i < p.layout.blocks(); ++i) {
    double Li = 0.0;
    for (std::size_t j = p.layout.offset(i); j < p.layout.offset(i) + p.layout.dim(i); ++j)
      Li = std::max(Li, d->q[j]);
    p.lipschitz.block[i] = Li;
  }
  p.lipschitz.residual = *std::max_element(d->q.begin(), d->q.end());

  p.smooth_value = [d](const BlockVector& x) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += 0.5 * d->q[j] * x[j] * x[j] - d->b[j] * x[j];
    return s;
  };
  p.partial_gradient = [d](const BlockVector& x, std::size_t i, std::span<double> out) {
    const std::size_t off = x.layout().offset(i);
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = d->q[off + j] * x[off + j] - d->b[off + j];
  };
  p.full_gradient = [d](const BlockVector& x, std::span<double> out) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = d->q[j] * x[j] - d->b[j];
  };
  attach_zero_g(p);
  return p;
}

}  // namespace abcfb
