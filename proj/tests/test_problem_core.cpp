#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <sstream>

#include "abcfb/block.hpp"
#include "abcfb/delay.hpp"
#include "abcfb/history.hpp"
#include "abcfb/lasso.hpp"
#include "abcfb/matrix_io.hpp"
#include "abcfb/norms.hpp"
#include "abcfb/problem.hpp"
#include "abcfb/quadratic.hpp"
#include "abcfb/rng.hpp"
#include "doctest.h"

using namespace abcfb;

namespace {

Eigen::MatrixXd identity2() { return Eigen::MatrixXd::Identity(2, 2); }

CompositeProblem half_norm_sq(std::size_t m) {
  // f(x) = 0.5*|x|^2 as a diagonal quadratic with unit curvatures.
  return make_diag_quadratic(BlockLayout::scalars(m), std::vector<double>(m, 1.0),
                             std::vector<double>(m, 0.0));
}

}  // namespace

TEST_CASE("block layout: offsets are prefix sums and totals agree") {
  BlockLayout layout({2, 3, 1});
  CHECK(layout.blocks() == 3);
  CHECK(layout.total() == 6);
  CHECK(layout.offset(0) == 0);
  CHECK(layout.offset(1) == 2);
  CHECK(layout.offset(2) == 5);
  CHECK(layout.dim(1) == 3);
  CHECK_THROWS_AS(BlockLayout({2, 0, 1}), StructuralError);
  CHECK_THROWS_AS(BlockLayout(std::vector<std::size_t>{}), StructuralError);
}

TEST_CASE("block vector: block views alias the dense storage") {
  BlockLayout layout({2, 1});
  BlockVector x(layout, {1.0, 2.0, 3.0});
  CHECK(x.block(0)[1] == 2.0);
  CHECK(x.block(1)[0] == 3.0);
  double two[] = {9.0, 8.0};
  x.set_block(0, two);
  CHECK(x[0] == 9.0);
  CHECK(x[1] == 8.0);
  CHECK(x[2] == 3.0);
  CHECK_THROWS_AS(BlockVector(layout, {1.0}), StructuralError);
  double one[] = {0.0};
  CHECK_THROWS_AS(x.set_block(0, one), StructuralError);
}

TEST_CASE("eval_F on l1-regularized least squares") {
  // A = I2, b = 0, lambda = 1 at x = 0: value 0.
  LassoInstance zero = make_lasso(identity2(), Eigen::Vector2d(0.0, 0.0), 1.0);
  BlockVector x0(zero.problem.layout);
  CHECK(eval_F(zero.problem, x0) == 0.0);

  // A = I2, b = (1,0), lambda = 1 at x = 0: 0.5*|b|^2 = 0.5.
  LassoInstance inst = make_lasso(identity2(), Eigen::Vector2d(1.0, 0.0), 1.0);
  CHECK(eval_F(inst.problem, BlockVector(inst.problem.layout)) == doctest::Approx(0.5));
}

TEST_CASE("eval_F returns +infinity outside an indicator domain") {
  CompositeProblem p = half_norm_sq(2);
  attach_box_g(p, 0.0, 0.0);  // indicator of {0} per block
  BlockVector x(p.layout, {0.5, 0.0});
  CHECK(eval_F(p, x) == std::numeric_limits<double>::infinity());
  CHECK(eval_F(p, BlockVector(p.layout)) == 0.0);
}

TEST_CASE("partial_grad hand values") {
  // f(x) = 0.5*|x|^2 at x=(3,4): grad_0 = 3.
  CompositeProblem p = half_norm_sq(2);
  BlockVector x(p.layout, {3.0, 4.0});
  CHECK(partial_grad(p, x, 0)[0] == doctest::Approx(3.0));

  // Least squares with A=[[1,2],[0,1]], b=0, x=(1,1):
  // Ax=(3,1), column 1 is (2,1), so grad_1 = 2*3+1*1 = 7.
  Eigen::MatrixXd A(2, 2);
  A << 1, 2, 0, 1;
  LassoInstance inst = make_lasso(A, Eigen::Vector2d(0.0, 0.0), 1.0);
  BlockVector xl(inst.problem.layout, {1.0, 1.0});
  CHECK(partial_grad(inst.problem, xl, 1)[0] == doctest::Approx(7.0));
  CHECK_THROWS_AS(partial_grad(inst.problem, xl, 2), StructuralError);
}

TEST_CASE("partial_grad agrees with central finite differences") {
  Eigen::MatrixXd A(4, 3);
  A << 0.3, -1.2, 0.7, 1.1, 0.4, -0.5, -0.9, 0.2, 1.3, 0.6, -0.8, 0.1;
  LassoInstance inst = make_lasso(A, Eigen::Vector4d(0.5, -1.0, 0.25, 2.0), 0.3);
  const CompositeProblem& p = inst.problem;
  CounterRng rng(123, 5);
  const double h = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> v(p.layout.total());
    for (double& c : v) c = 4.0 * rng.next_unit() - 2.0;
    BlockVector x(p.layout, v);
    for (std::size_t i = 0; i < p.layout.blocks(); ++i) {
      double g = partial_grad(p, x, i)[0];
      BlockVector xp = x, xm = x;
      xp[p.layout.offset(i)] += h;
      xm[p.layout.offset(i)] -= h;
      double fd = (p.smooth_value(xp) - p.smooth_value(xm)) / (2.0 * h);
      CHECK(g == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("prox_block built-ins") {
  CompositeProblem p = half_norm_sq(1);

  SUBCASE("zero g is the identity") {
    double v[] = {1.75};
    CHECK(prox_block(p, 0, v, 0.7)[0] == 1.75);
  }
  SUBCASE("absolute value: dead zone and shift") {
    attach_l1_g(p, 1.0);
    double inside[] = {0.5};
    CHECK(prox_block(p, 0, inside, 1.0)[0] == 0.0);  // threshold 1*1 = 1
    CompositeProblem q = half_norm_sq(1);
    attach_l1_g(q, 1.0);
    double outside[] = {-2.0};
    CHECK(prox_block(q, 0, outside, 0.5)[0] == doctest::Approx(-1.5));  // soft_{0.5}(-2)
  }
  SUBCASE("gamma must be positive") {
    double v[] = {1.0};
    CHECK_THROWS_AS(prox_block(p, 0, v, 0.0), ParameterError);
    CHECK_THROWS_AS(prox_block(p, 0, v, -1.0), ParameterError);
  }
}

TEST_CASE("prox nonexpansiveness for every built-in g") {
  CounterRng rng(77, 9);
  for (int variant = 0; variant < 3; ++variant) {
    CompositeProblem p = half_norm_sq(1);
    if (variant == 1) attach_l1_g(p, 0.8);
    if (variant == 2) attach_box_g(p, -1.0, 2.0);
    for (int rep = 0; rep < 1000; ++rep) {
      double u[] = {20.0 * rng.next_unit() - 10.0};
      double v[] = {20.0 * rng.next_unit() - 10.0};
      double gamma = 0.01 + 3.0 * rng.next_unit();
      double pu = prox_block(p, 0, u, gamma)[0];
      double pv = prox_block(p, 0, v, gamma)[0];
      CHECK(std::abs(pu - pv) <= std::abs(u[0] - v[0]) + 1e-15);
    }
  }
}

TEST_CASE("weighted norms") {
  BlockLayout layout = BlockLayout::scalars(2);

  SUBCASE("zero vector") {
    CHECK(weighted_norm_sq(BlockVector(layout), WeightVector({2.0, 3.0})) == 0.0);
  }
  SUBCASE("hand sum: w=(2,3), x=(1,1) gives 5") {
    BlockVector x(layout, {1.0, 1.0});
    CHECK(weighted_norm_sq(x, WeightVector({2.0, 3.0})) == doctest::Approx(5.0));
  }
  SUBCASE("probability norm is dominated by p_max times the plain norm") {
    std::vector<double> p = {0.2, 0.8};
    CounterRng rng(5, 11);
    for (int rep = 0; rep < 1000; ++rep) {
      BlockVector x(layout, {10 * rng.next_unit() - 5, 10 * rng.next_unit() - 5});
      double v = weighted_norm_sq(x, probability_weights(p));
      double plain = norm_sq(std::span<const double>(x.values()));
      CHECK(v <= 0.8 * plain + 1e-12);
    }
  }
  SUBCASE("W weights equal the GammaInv weights divided blockwise by p") {
    std::vector<double> gamma = {0.3, 0.7};
    std::vector<double> p = {0.25, 0.75};
    BlockVector x(layout, {1.5, -2.5});
    WeightVector w = inverse_stepsize_probability_weights(gamma, p);
    WeightVector gi = inverse_stepsize_weights(gamma);
    double direct = weighted_norm_sq(x, w);
    double rebuilt = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
      rebuilt += (gi.w[i] / p[i]) * norm_sq(x.block(i));
    CHECK(direct == doctest::Approx(rebuilt).epsilon(1e-15));
  }
  SUBCASE("weights must be positive") {
    CHECK_THROWS_AS(WeightVector({1.0, 0.0}), ParameterError);
    CHECK_THROWS_AS(inverse_stepsize_weights({1.0, -0.5}), ParameterError);
  }
}

TEST_CASE("prox_grad_residual hand values") {
  CompositeProblem p = half_norm_sq(1);

  // Minimizer of the 1-D quadratic: residual 0.
  CHECK(prox_grad_residual(p, BlockVector(p.layout), {1.0}) == 0.0);

  // f(x)=x^2/2, g=0, gamma=1, x=2: forward step lands at 0, so the residual
  // is |2-0| in the sqrt(1/gamma)-scaled norm = 2.
  BlockVector x(p.layout, {2.0});
  CHECK(prox_grad_residual(p, x, {1.0}) == doctest::Approx(2.0));
}

TEST_CASE("objective convexity spot-check on random pairs") {
  Eigen::MatrixXd A(3, 4);
  A << 1, 0.5, -0.25, 0, 0, 1, 0.75, -1, 0.5, 0, 1, 0.25;
  LassoInstance inst = make_lasso(A, Eigen::Vector3d(1.0, -2.0, 0.5), 0.4);
  const CompositeProblem& p = inst.problem;
  CounterRng rng(31, 3);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> xv(4), yv(4), mv(4);
    for (std::size_t j = 0; j < 4; ++j) {
      xv[j] = 6 * rng.next_unit() - 3;
      yv[j] = 6 * rng.next_unit() - 3;
      mv[j] = 0.5 * (xv[j] + yv[j]);
    }
    double Fm = eval_F(p, BlockVector(p.layout, mv));
    double Fx = eval_F(p, BlockVector(p.layout, xv));
    double Fy = eval_F(p, BlockVector(p.layout, yv));
    CHECK(Fm <= 0.5 * Fx + 0.5 * Fy + 1e-12);
  }
}

TEST_CASE("problem validation rejects inconsistent metadata") {
  CompositeProblem p = half_norm_sq(2);
  CHECK_NOTHROW(validate(p));
  SUBCASE("nonpositive block constant") {
    p.lipschitz.block[0] = 0.0;
    CHECK_THROWS_AS(validate(p), ParameterError);
  }
  SUBCASE("residual constant below the largest block constant") {
    p.lipschitz.residual = 0.5;
    CHECK_THROWS_AS(validate(p), ParameterError);
  }
  SUBCASE("missing oracle") {
    p.prox = nullptr;
    CHECK_THROWS_AS(validate(p), StructuralError);
  }
  SUBCASE("wrong number of block constants") {
    p.lipschitz.block.push_back(1.0);
    CHECK_THROWS_AS(validate(p), StructuralError);
  }
}

TEST_CASE("diagonal quadratic builder") {
  CompositeProblem p =
      make_diag_quadratic(BlockLayout::scalars(2), {1.0, 2.0}, {1.0, 0.0});
  // f(x) = 0.5*(x0^2 + 2 x1^2) - x0; grad at 0 is (-1, 0).
  BlockVector zero(p.layout);
  CHECK(partial_grad(p, zero, 0)[0] == doctest::Approx(-1.0));
  CHECK(partial_grad(p, zero, 1)[0] == 0.0);
  CHECK(p.lipschitz.block[1] == 2.0);
  CHECK(p.lipschitz.residual == 2.0);
  CHECK(eval_F(p, BlockVector(p.layout, {1.0, 0.0})) == doctest::Approx(-0.5));
}

TEST_CASE("iterate history ring buffer retains the last tau+1 snapshots") {
  BlockLayout layout = BlockLayout::scalars(2);
  IterateHistory hist(2, BlockVector(layout));  // x^0 = (0,0)
  BlockVector x1(layout, {1.0, 0.0});
  BlockVector x2(layout, {1.0, 2.0});
  BlockVector x3(layout, {3.0, 2.0});
  hist.push(x1);
  hist.push(x2);
  CHECK(hist.newest() == 2);
  CHECK(hist.snapshot(0).values() == std::vector<double>{0.0, 0.0});
  CHECK(hist.snapshot(2).values() == std::vector<double>{1.0, 2.0});
  hist.push(x3);
  CHECK(hist.snapshot(1).values() == std::vector<double>{1.0, 0.0});
  CHECK_THROWS_AS(hist.snapshot(0), ContractError);  // evicted
  CHECK_THROWS_AS(hist.snapshot(4), ContractError);  // future
}

TEST_CASE("delayed_read composes an inconsistent snapshot") {
  BlockLayout layout = BlockLayout::scalars(2);
  IterateHistory hist(2, BlockVector(layout));
  hist.push(BlockVector(layout, {1.0, 0.0}));  // x^1
  hist.push(BlockVector(layout, {1.0, 2.0}));  // x^2

  SUBCASE("zero delays return the newest iterate") {
    BlockVector r = delayed_read(hist, 2, {0, 0});
    CHECK(r.values() == std::vector<double>{1.0, 2.0});
  }
  SUBCASE("hand trace: d=(1,2) at k=2 mixes x^1 and x^0 into (1,0)") {
    BlockVector r = delayed_read(hist, 2, {1, 2});
    CHECK(r.values() == std::vector<double>{1.0, 0.0});
  }
  SUBCASE("delays above min(k, tau) are rejected") {
    CHECK_THROWS_AS(delayed_read(hist, 2, {3, 0}), ContractError);
  }
  SUBCASE("k=0 only admits zero delay") {
    IterateHistory fresh(2, BlockVector(layout, {5.0, 6.0}));
    BlockVector r = delayed_read(fresh, 0, {0, 0});
    CHECK(r.values() == std::vector<double>{5.0, 6.0});
    CHECK_THROWS_AS(delayed_read(fresh, 0, {1, 0}), ContractError);
  }
}

TEST_CASE("delay models respect the min(k, tau) bound") {
  CounterRng rng(42, 2);

  SUBCASE("zero model") {
    auto d = gen_delay(DelayModel::zero(), 100, 3, rng);
    CHECK(d == std::vector<unsigned>{0, 0, 0});
  }
  SUBCASE("constant model clips at early iterations") {
    auto d = gen_delay(DelayModel::constant(5, 8), 2, 3, rng);
    CHECK(d == std::vector<unsigned>{2, 2, 2});
    d = gen_delay(DelayModel::constant(5, 8), 100, 3, rng);
    CHECK(d == std::vector<unsigned>{5, 5, 5});
    CHECK_THROWS_AS(DelayModel::constant(9, 8), ParameterError);
  }
  SUBCASE("adversarial model pins every coordinate at the bound") {
    auto d = gen_delay(DelayModel::adversarial(4), 2, 2, rng);
    CHECK(d == std::vector<unsigned>{2, 2});
    d = gen_delay(DelayModel::adversarial(4), 9, 2, rng);
    CHECK(d == std::vector<unsigned>{4, 4});
  }
  SUBCASE("shared uniform draw: all coordinates equal") {
    auto model = DelayModel::uniform(6);
    for (std::uint64_t k = 0; k < 200; ++k) {
      auto d = gen_delay(model, k, 4, rng);
      CHECK(d[0] <= std::min<std::uint64_t>(k, 6));
      for (unsigned di : d) CHECK(di == d[0]);
    }
  }
  SUBCASE("per-block draws: coordinates bounded and eventually distinct") {
    auto model = DelayModel::per_block_uniform(6);
    bool saw_distinct = false;
    for (std::uint64_t k = 0; k < 200; ++k) {
      auto d = gen_delay(model, k, 4, rng);
      for (unsigned di : d) CHECK(di <= std::min<std::uint64_t>(k, 6));
      for (unsigned di : d) saw_distinct = saw_distinct || di != d[0];
    }
    CHECK(saw_distinct);
  }
}

TEST_CASE("per-block uniform delays have uniform marginals") {
  // tau = 3, draws at k >= 3: each coordinate uniform on {0,1,2,3}.
  // Chi-square 3-sigma band: expected n/4 per bin, sd = sqrt(n*p*(1-p)).
  CounterRng rng(2024, 2);
  auto model = DelayModel::per_block_uniform(3);
  const std::size_t m = 2, n = 100000;
  std::vector<std::vector<std::uint64_t>> counts(m, std::vector<std::uint64_t>(4, 0));
  for (std::size_t t = 0; t < n; ++t) {
    auto d = gen_delay(model, 1000 + t, m, rng);
    for (std::size_t i = 0; i < m; ++i) ++counts[i][d[i]];
  }
  const double expect = n / 4.0;
  const double sd = std::sqrt(n * 0.25 * 0.75);
  for (std::size_t i = 0; i < m; ++i)
    for (int v = 0; v < 4; ++v)
      CHECK(std::abs(counts[i][v] - expect) <= 3.0 * sd);
}

TEST_CASE("dense matrix text round-trip") {
  Eigen::MatrixXd A(2, 3);
  A << 1.5, -2.25, 0.0, 1e-17, 3.0, -4.5;
  std::ostringstream os;
  write_dense_matrix(os, A);
  std::istringstream is(os.str());
  Eigen::MatrixXd B = read_dense_matrix(is);
  REQUIRE(B.rows() == 2);
  REQUIRE(B.cols() == 3);
  CHECK((B.array() == A.array()).all());  // shortest round-trip formatting is exact

  std::istringstream bad1("2 2\n1 2 3");
  CHECK_THROWS_AS(read_dense_matrix(bad1), StructuralError);
  std::istringstream bad2("not a header");
  CHECK_THROWS_AS(read_dense_matrix(bad2), StructuralError);
}
