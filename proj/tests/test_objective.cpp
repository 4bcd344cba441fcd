#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "icd/icd.hpp"
#include "icd/objective.hpp"
#include "test_util.hpp"

namespace icd {
namespace {

using testing::random_dense;
using testing::random_vector;
using testing::to_sparse;
using testing::vec;

SparseMatrix identity2() { return testing::diag({1.0, 1.0}); }

CompositeObjective identity_objective(SeparableRegularizer reg, std::vector<Index> sizes = {2}) {
  QuadraticSmooth smooth(identity2(), Vector::Zero(2), BlockPartition(sizes));
  return CompositeObjective::with_quadratic_metric(std::move(smooth), std::move(reg));
}

CompositeObjective random_objective(Index m, std::vector<Index> sizes, std::mt19937_64& rng,
                                    SeparableRegularizer reg = SeparableRegularizer::zero()) {
  const BlockPartition part(sizes);
  QuadraticSmooth smooth(to_sparse(random_dense(m, part.dim(), rng)), random_vector(m, rng), part);
  return CompositeObjective::with_quadratic_metric(std::move(smooth), std::move(reg));
}

TEST(EvalF, IdentityNoRegularizer) {
  const auto obj = identity_objective(SeparableRegularizer::zero());
  const ResidualState s(obj, vec({1.0, 1.0}));
  EXPECT_DOUBLE_EQ(eval_F(s), 1.0);
  EXPECT_DOUBLE_EQ(eval_f(s), 1.0);
}

TEST(EvalF, IdentityWithL1) {
  const auto obj = identity_objective(SeparableRegularizer::l1(1.0));
  const ResidualState s(obj, vec({1.0, 1.0}));
  EXPECT_DOUBLE_EQ(eval_F(s), 3.0);
  EXPECT_DOUBLE_EQ(eval_f(s), 1.0);
}

TEST(EvalF, ConsistentSystemAtSolutionIsZero) {
  std::mt19937_64 rng(3);
  const BlockPartition part({2, 3});
  const DenseMatrix a = random_dense(8, 5, rng);
  const Vector xs = random_vector(5, rng);
  QuadraticSmooth smooth(to_sparse(a), a * xs, part);
  const auto obj = CompositeObjective::with_quadratic_metric(std::move(smooth), SeparableRegularizer::zero());
  const ResidualState s(obj, xs);
  EXPECT_NEAR(eval_f(s), 0.0, 1e-24);
  for (Index i = 0; i < 2; ++i) EXPECT_LT(block_gradient(s, i).norm(), 1e-12);
}

TEST(BlockGradient, IdentitySingleBlock) {
  const auto obj = identity_objective(SeparableRegularizer::zero());
  const ResidualState s(obj, vec({1.0, 1.0}));
  const Vector g = block_gradient(s, 0);
  EXPECT_DOUBLE_EQ(g[0], 1.0);
  EXPECT_DOUBLE_EQ(g[1], 1.0);
}

void check_finite_difference(Index m, std::vector<Index> sizes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto obj = random_objective(m, sizes, rng);
  const Vector x = random_vector(obj.dim(), rng);
  const ResidualState s(obj, x);
  const double h = 1e-5;
  for (Index i = 0; i < obj.num_blocks(); ++i) {
    const Vector g = block_gradient(s, i);
    Vector fd(g.size());
    for (Index j = 0; j < g.size(); ++j) {
      Vector xp = x, xm = x;
      xp[obj.partition().offset(i) + j] += h;
      xm[obj.partition().offset(i) + j] -= h;
      fd[j] = (obj.value_at(xp) - obj.value_at(xm)) / (2 * h);
    }
    EXPECT_LE((g - fd).norm() / g.norm(), 1e-6) << "block " << i;
  }
}

TEST(BlockGradient, FiniteDifferenceSmall) { check_finite_difference(6, {2, 2}, 11); }

TEST(BlockGradient, FiniteDifferenceDense10x8) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) check_finite_difference(10, {3, 5}, 100 + seed);
}

TEST(ModelValue, ZeroStepGivesRegularizer) {
  std::mt19937_64 rng(5);
  const auto obj = random_objective(7, {3, 2}, rng, SeparableRegularizer::l1(0.3));
  const Vector x = random_vector(5, rng);
  const ResidualState s(obj, x);
  for (Index i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(model_value(s, i, Vector::Zero(obj.partition().size(i))),
                     0.3 * obj.partition().block(x, i).lpNorm<1>());
  }
}

TEST(ModelValue, IdentityHandExample) {
  const auto obj = identity_objective(SeparableRegularizer::zero());
  const ResidualState s(obj, vec({1.0, 1.0}));
  EXPECT_DOUBLE_EQ(model_value(s, 0, vec({-1.0, -1.0})), -1.0);
}

TEST(ModelValue, QuadraticMetricIsShiftedResidual) {
  std::mt19937_64 rng(8);
  const auto obj = random_objective(9, {3, 4}, rng);
  const ResidualState s(obj, random_vector(7, rng));
  for (Index i = 0; i < 2; ++i) {
    const Vector t = random_vector(obj.partition().size(i), rng);
    const Vector moved = obj.smooth().block_columns(i) * t + s.residual();
    const double expected = 0.5 * moved.squaredNorm() - 0.5 * s.residual().squaredNorm();
    EXPECT_NEAR(model_value(s, i, t), expected, 1e-10 * (1 + std::abs(expected)));
  }
}

TEST(ModelValue, ExactMinimizerValueMatchesConjugateNorm) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(200 + seed);
    const auto obj = random_objective(12, {4, 3}, rng);
    const ResidualState s(obj, random_vector(7, rng));
    for (Index i = 0; i < 2; ++i) {
      const Vector g = block_gradient(s, i);
      const SparseMatrix b = obj.block_operator(i).assemble();
      const Vector t0 = -solve_exact_cholesky(b, g) / obj.lipschitz(i);
      const double dual = conjugate_block_norm(g, obj.block_operator(i));
      const double expected = -dual * dual / (2 * obj.lipschitz(i));
      EXPECT_NEAR(model_value(s, i, t0), expected, 1e-10 * (1 + std::abs(expected)));
    }
  }
}

TEST(EvalH, ZeroStepGivesF) {
  std::mt19937_64 rng(9);
  const auto obj = random_objective(8, {2, 3}, rng, SeparableRegularizer::l1(0.5));
  const ResidualState s(obj, random_vector(5, rng));
  EXPECT_NEAR(eval_H(s, Vector::Zero(5)), eval_F(s), 1e-12);
}

TEST(EvalH, SumFormMatchesDirectForm) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(300 + seed);
    const auto obj = random_objective(10, {2, 3, 3}, rng,
                                      SeparableRegularizer::group_lasso(0.4, {2.0, 3.0, 3.0}));
    const ResidualState s(obj, random_vector(8, rng));
    const Vector step = random_vector(8, rng);
    const double h1 = eval_H(s, step);
    EXPECT_NEAR(h1, eval_H_direct(s, step), 1e-10 * (1 + std::abs(h1)));
  }
}

TEST(EvalH, InexactUpdateSandwich) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(400 + seed);
    const auto obj = random_objective(15, {3, 4, 2}, rng);
    const ResidualState s(obj, random_vector(9, rng));
    const double delta = 1e-3;
    SolverOptions exact_opts;
    exact_opts.solver = InnerSolver::Exact;
    SolverOptions cg_opts;
    cg_opts.solver = InnerSolver::CG;
    cg_opts.rigorous = true;
    Vector t_exact(9), t_inexact(9);
    for (Index i = 0; i < 3; ++i) {
      obj.partition().block(t_exact, i) = compute_update(obj, s, i, 0.0, exact_opts).t;
      obj.partition().block(t_inexact, i) = compute_update(obj, s, i, delta, cg_opts).t;
    }
    const double h0 = eval_H(s, t_exact);
    const double hd = eval_H(s, t_inexact);
    EXPECT_LE(h0, hd + 1e-12);
    EXPECT_LE(hd, h0 + 3 * delta + 1e-12);
  }
}

TEST(Regularizer, Variants) {
  EXPECT_DOUBLE_EQ(regularizer_value(SeparableRegularizer::zero(), 0, vec({5.0, -7.0})), 0.0);
  EXPECT_NEAR(regularizer_value(SeparableRegularizer::l1(0.01), 0, vec({1.0, -2.0})), 0.03, 1e-15);
  EXPECT_DOUBLE_EQ(regularizer_value(SeparableRegularizer::group_lasso(1.0, {4.0}), 0, vec({3.0, 4.0})),
                   10.0);
}

TEST(Regularizer, RejectsInvalidParameters) {
  EXPECT_THROW(SeparableRegularizer::l1(-1.0), std::invalid_argument);
  EXPECT_THROW(SeparableRegularizer::group_lasso(1.0, {1.0, 0.0}), std::invalid_argument);
  QuadraticSmooth smooth(identity2(), Vector::Zero(2), BlockPartition({1, 1}));
  EXPECT_THROW(CompositeObjective::with_quadratic_metric(
                   std::move(smooth), SeparableRegularizer::group_lasso(1.0, {1.0})),
               std::invalid_argument);
}

TEST(Regularizer, SeparableSumMatchesWhole) {
  std::mt19937_64 rng(12);
  const BlockPartition part({2, 3, 4});
  const Vector x = random_vector(9, rng);
  const auto l1 = SeparableRegularizer::l1(0.7);
  double sum = 0.0;
  for (Index i = 0; i < 3; ++i) sum += l1.value(i, part.block(x, i));
  EXPECT_NEAR(sum, 0.7 * x.lpNorm<1>(), 1e-12);
}

TEST(ApplyUpdate, ZeroStepLeavesStateUnchanged) {
  std::mt19937_64 rng(13);
  const auto obj = random_objective(6, {2, 2}, rng, SeparableRegularizer::l1(0.2));
  ResidualState s(obj, random_vector(4, rng));
  const Vector x = s.x(), r = s.residual();
  const double f = eval_F(s);
  s.apply_update(1, Vector::Zero(2));
  EXPECT_EQ(s.x(), x);
  EXPECT_EQ(s.residual(), r);
  EXPECT_DOUBLE_EQ(eval_F(s), f);
}

TEST(ApplyUpdate, IdentityStepToOrigin) {
  const auto obj = identity_objective(SeparableRegularizer::zero());
  ResidualState s(obj, vec({1.0, 1.0}));
  s.apply_update(0, vec({-1.0, -1.0}));
  EXPECT_EQ(s.x(), Vector::Zero(2));
  EXPECT_EQ(s.residual(), Vector::Zero(2));
  EXPECT_DOUBLE_EQ(eval_F(s), 0.0);
}

TEST(ApplyUpdate, IncrementalMatchesRecompute) {
  std::mt19937_64 rng(14);
  const auto obj = random_objective(20, {4, 4, 4}, rng, SeparableRegularizer::l1(0.1));
  ResidualState s(obj, random_vector(12, rng));
  std::uniform_int_distribution<Index> pick(0, 2);
  for (int k = 0; k < 200; ++k) {
    const Index i = pick(rng);
    s.apply_update(i, 0.1 * random_vector(4, rng));
  }
  EXPECT_LE(s.residual_drift(), 1e-12 * (1 + obj.smooth().rhs().norm()));
  EXPECT_NEAR(eval_F(s), obj.value_at(s.x()), 1e-10 * (1 + eval_F(s)));
}

TEST(ApplyUpdate, WrongLengthThrows) {
  const auto obj = identity_objective(SeparableRegularizer::zero(), {1, 1});
  ResidualState s(obj, vec({1.0, 1.0}));
  EXPECT_THROW(s.apply_update(0, vec({1.0, 1.0})), std::invalid_argument);
}

TEST(QuadraticMetric, RankDeficientBlockIsShifted) {
  DenseMatrix a(3, 2);
  a << 1, 2, 1, 2, 1, 2;  // rank one
  QuadraticSmooth smooth(to_sparse(a), Vector::Ones(3), BlockPartition({2}));
  const BlockMetric metric = quadratic_metric(smooth);
  EXPECT_GT(metric.operators[0].shift(), 0.0);
  EXPECT_GT(metric.operators[0].quadratic_form(vec({2.0, -1.0})), 0.0);
  EXPECT_DOUBLE_EQ(metric.lipschitz[0], 1.0);
}

TEST(QuadraticMetric, FullRankBlockIsNotShifted) {
  std::mt19937_64 rng(15);
  QuadraticSmooth smooth(to_sparse(random_dense(6, 3, rng)), Vector::Ones(6), BlockPartition({3}));
  EXPECT_EQ(quadratic_metric(smooth).operators[0].shift(), 0.0);
}

class Overapproximation : public ::testing::TestWithParam<int> {};

TEST_P(Overapproximation, ModelBoundsObjective) {
  std::mt19937_64 rng(500 + GetParam());
  const bool use_l1 = GetParam() % 2 == 0;
  const auto reg = use_l1 ? SeparableRegularizer::l1(0.3) : SeparableRegularizer::zero();
  const auto obj = random_objective(10, {3, 3, 2}, rng, reg);
  const Vector x = random_vector(8, rng);
  const ResidualState s(obj, x);
  for (Index i = 0; i < 3; ++i) {
    const Vector t = random_vector(obj.partition().size(i), rng);
    Vector moved = x;
    obj.partition().block(moved, i) += t;
    const double psi_rest = s.regularizer_value() - s.block_regularizer(i);
    const double bound = eval_f(s) + model_value(s, i, t) + psi_rest;
    const double actual = obj.value_at(moved);
    EXPECT_LE(actual, bound + 1e-10 * (1 + std::abs(bound)));
    // The quadratic metric makes the model exact.
    EXPECT_NEAR(actual, bound, 1e-10 * (1 + std::abs(bound)));
  }
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, Overapproximation, ::testing::Range(0, 10));

TEST(MonotoneSurrogate, GuardedUpdateDoesNotIncreaseF) {
  std::mt19937_64 rng(16);
  const auto obj = random_objective(30, {5, 5, 5}, rng, SeparableRegularizer::l1(0.2));
  ResidualState s(obj, random_vector(15, rng));
  SolverOptions opts;
  opts.solver = InnerSolver::ProxGradient;
  UpdateEngine engine(obj, opts);
  std::uniform_int_distribution<Index> pick(0, 2);
  for (int k = 0; k < 50; ++k) {
    const Index i = pick(rng);
    const UpdateResult u = engine.compute_update(s, i, 1e-2);
    EXPECT_LE(model_value(s, i, u.t), model_value(s, i, Vector::Zero(5)) + 1e-12);
    const double before = eval_F(s);
    s.apply_update(i, u.t);
    EXPECT_LE(eval_F(s), before + 1e-12);
  }
}

}  // namespace
}  // namespace icd
