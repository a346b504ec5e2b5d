#pragma once

#include <vector>

#include "abcfb/problem.hpp"

namespace abcfb {

// Separable quadratic smooth term
//
//   f(x) = 1/2 sum_j q_j x_j^2 - b.x,   q_j > 0,
//
// partitioned by the given layout. Exact constants: L_i is the largest q_j
// inside block i and L_res is the largest q_j overall. No nonsmooth term is
// attached; pair with attach_zero_g / attach_l1_g / attach_box_g.
CompositeProblem make_diag_quadratic(BlockLayout layout, std::vector<double> q,
                                     std::vector<double> b);

}  // namespace abcfb
