#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "abcfb/problem.hpp"

namespace abcfb {

// prox of rho*|.| : sign(v) * max(|v| - rho, 0).
double soft_threshold(double v, double rho);

// Squared spectral norm |A|^2 estimated by power iteration on A^T A with a
// deterministic seeded start vector. Converges when the Rayleigh quotient
// stabilizes to rel_tol; throws Error if max_iters passes first.
double spectral_norm_sq(const Eigen::MatrixXd& A, double rel_tol = 1e-10,
                        std::uint64_t max_iters = 10000);

// min over x of  1/2 |Ax - b|^2 + lambda |x|_1  with one scalar block per
// column of A.
struct LassoInstance {
  Eigen::MatrixXd A;  // n x m
  Eigen::VectorXd b;  // n
  double lambda = 0.0;
  std::vector<double> column_norms_sq;  // |a_i|^2 = L_i
  double spectral_sq = 0.0;             // |A|^2 estimate, inflated by 1e-6 rel.
  CompositeProblem problem;
};

// Per-block constants: L_i = |a_i|^2 (zero columns rejected), L_res = |A|^2.
// The spectral estimate is inflated by a 1e-6 relative margin before being
// stored, so stepsize rules built from it stay strictly inside their bounds
// under estimation error.
LassoInstance make_lasso(Eigen::MatrixXd A, Eigen::VectorXd b, double lambda);

// Random desk-scale instance: A has iid standard normal entries scaled by
// 1/sqrt(n), b = A x_planted + noise where x_planted has `support` nonzero
// entries of size O(1) and the noise is iid normal(0, noise_sigma).
LassoInstance random_lasso(std::size_t n, std::size_t m, double lambda,
                           std::uint64_t seed, std::size_t support = 10,
                           double noise_sigma = 0.01);

}  // namespace abcfb
