#include "abcfb/lasso.hpp"

#include <cmath>
#include <memory>

#include "abcfb/rng.hpp"

namespace abcfb {

double soft_threshold(double v, double rho) {
  if (!(rho >= 0.0)) throw ParameterError("threshold must be nonnegative");
  if (v > rho) return v - rho;
  if (v < -rho) return v + rho;
  return 0.0;
}

double spectral_norm_sq(const Eigen::MatrixXd& A, double rel_tol, std::uint64_t max_iters) {
  if (A.size() == 0) throw StructuralError("empty matrix");
  const Eigen::Index m = A.cols();

  // Deterministic start with energy in every direction.
  CounterRng rng(0x5eedu, 7);
  Eigen::VectorXd q(m);
  for (Eigen::Index j = 0; j < m; ++j) q[j] = rng.next_unit() + 0.5;
  q.normalize();

  double lambda_prev = 0.0;
  for (std::uint64_t it = 0; it < max_iters; ++it) {
    Eigen::VectorXd z = A.transpose() * (A * q);
    const double lambda = q.dot(z);  // Rayleigh quotient for A^T A
    const double nz = z.norm();
    if (nz == 0.0) {
      if (A.isZero(0.0)) return 0.0;
      throw Error("power iteration start vector lies in the kernel");
    }
    q = z / nz;
    if (it > 0 && std::abs(lambda - lambda_prev) <= rel_tol * std::abs(lambda))
      return lambda;
    lambda_prev = lambda;
  }
  throw Error("power iteration did not converge");
}

LassoInstance make_lasso(Eigen::MatrixXd A, Eigen::VectorXd b, double lambda) {
  if (A.rows() == 0 || A.cols() == 0) throw StructuralError("empty design matrix");
  if (b.size() != A.rows()) throw StructuralError("right-hand side length mismatch");
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");

  LassoInstance inst;
  inst.lambda = lambda;
  inst.column_norms_sq.resize(static_cast<std::size_t>(A.cols()));
  for (Eigen::Index i = 0; i < A.cols(); ++i) {
    const double c = A.col(i).squaredNorm();
    if (!(c > 0.0)) throw ParameterError("design matrix has a zero column");
    inst.column_norms_sq[static_cast<std::size_t>(i)] = c;
  }
  inst.spectral_sq = spectral_norm_sq(A) * (1.0 + 1e-6);

  struct Data {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
  };
  auto d = std::make_shared<const Data>(Data{std::move(A), std::move(b)});
  const std::size_t m = static_cast<std::size_t>(d->A.cols());

  CompositeProblem p;
  p.layout = BlockLayout::scalars(m);
  p.name = "lasso";
  p.lipschitz.block = inst.column_norms_sq;
  p.lipschitz.residual = inst.spectral_sq;

  p.smooth_value = [d](const BlockVector& x) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), d->A.cols());
    return 0.5 * (d->A * xv - d->b).squaredNorm();
  };
  p.partial_gradient = [d](const BlockVector& x, std::size_t i, std::span<double> out) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), d->A.cols());
    out[0] = d->A.col(static_cast<Eigen::Index>(i)).dot(d->A * xv - d->b);
  };
  p.full_gradient = [d](const BlockVector& x, std::span<double> out) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), d->A.cols());
    Eigen::Map<Eigen::VectorXd> ov(out.data(), d->A.cols());
    ov = d->A.transpose() * (d->A * xv - d->b);
  };
  attach_l1_g(p, lambda);

  inst.A = d->A;
  inst.b = d->b;
  inst.problem = std::move(p);
  return inst;
}

LassoInstance random_lasso(std::size_t n, std::size_t m, double lambda, std::uint64_t seed,
                           std::size_t support, double noise_sigma) {
  if (n == 0 || m == 0) throw StructuralError("empty instance");
  if (support > m) throw ParameterError("support larger than column count");

  CounterRng entries(seed, 11);
  CounterRng plan(seed, 12);

  // Box-Muller pairs from the counter generator.
  auto normal = [](CounterRng& rng) {
    const double u1 = 1.0 - rng.next_unit();  // (0,1]
    const double u2 = rng.next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  };

  Eigen::MatrixXd A(n, m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c)
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = scale * normal(entries);

  Eigen::VectorXd x_planted = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t s = 0; s < support; ++s) {
    Eigen::Index idx;
    do {
      idx = static_cast<Eigen::Index>(plan.next_below(m));
    } while (x_planted[idx] != 0.0);
    const double sign = plan.next_unit() < 0.5 ? -1.0 : 1.0;
    x_planted[idx] = sign * (1.0 + plan.next_unit());
  }

  Eigen::VectorXd b = A * x_planted;
  for (Eigen::Index r = 0; r < b.size(); ++r) b[r] += noise_sigma * normal(entries);

  return make_lasso(std::move(A), std::move(b), lambda);
}

}  // namespace abcfb
