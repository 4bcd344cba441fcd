#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "icd/complexity.hpp"
#include "test_util.hpp"

namespace icd {
namespace {

using testing::diag;
using testing::vec;

BoundInputs inputs(double c, double alpha, double beta, double eps, double rho, double xi0) {
  return {c, alpha, beta, eps, rho, xi0};
}

TEST(SigmaU, ExactCaseIsZero) {
  const SigmaU su = sigma_u(50.0, 0.0, 0.0);
  EXPECT_EQ(su.sigma, 0.0);
  EXPECT_EQ(su.u, 0.0);
  EXPECT_TRUE(su.feasible);
}

TEST(SigmaU, FrozenValues) {
  const SigmaU su = sigma_u(100.0, 0.01, 0.01);
  EXPECT_NEAR(su.sigma, 0.022360679774997897, 1e-15);
  EXPECT_NEAR(su.u, 1.6180339887498947, 1e-13);
}

TEST(SigmaU, ZeroBetaGivesAlpha) {
  const SigmaU su = sigma_u(40.0, 0.02, 0.0);
  EXPECT_DOUBLE_EQ(su.sigma, 0.02);
  EXPECT_DOUBLE_EQ(su.u, 0.02 * 40.0);
}

TEST(SigmaU, LargeSigmaIsFlaggedNotThrown) {
  EXPECT_FALSE(sigma_u(1.0, 0.5, 1.0).feasible);
}

TEST(CaseI, ExactExample) {
  const BoundResult r = iterations_case_i(inputs(80.0, 0.0, 0.0, 1.0, std::exp(-1.0), 3.0));
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.bound, 135.33333333333334, 1e-9);
  EXPECT_EQ(r.iterations, 136);
  EXPECT_FALSE(r.used_log_branch);
}

TEST(CaseI, EpsilonAtLeastXi0IsInfeasible) {
  const BoundResult r = iterations_case_i(inputs(80.0, 0.0, 0.0, 3.0, 0.5, 3.0));
  EXPECT_FALSE(r.feasible);
  ASSERT_FALSE(r.violated.empty());
  EXPECT_NE(r.violated.front().find("xi0"), std::string::npos);
}

TEST(CaseI, BetaPushingLowerBoundAboveEpsilonIsInfeasible) {
  const double c1 = 80.0, alpha = 0.001, eps = 1.0, rho = 0.1;
  const double threshold = c1 * rho * (std::pow(2 * eps / c1 - alpha, 2) - alpha * alpha) / 4;
  const BoundResult below = iterations_case_i(inputs(c1, alpha, 0.9 * threshold, eps, rho, 5.0));
  EXPECT_TRUE(below.feasible);
  const BoundResult above = iterations_case_i(inputs(c1, alpha, threshold * 1.01, eps, rho, 5.0));
  EXPECT_FALSE(above.feasible);
  ASSERT_EQ(above.violated.size(), 1u);
  EXPECT_NE(above.violated[0].find("< epsilon"), std::string::npos);
}

TEST(CaseII, ExactExample) {
  const BoundResult r = iterations_case_ii(inputs(10.0, 0.0, 0.0, 0.01, 0.1, 1.0));
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.bound, 69.07755278982137, 1e-9);
  EXPECT_EQ(r.iterations, 70);
}

TEST(CaseII, ShiftedExample) {
  const BoundResult r = iterations_case_ii(inputs(10.0, 0.05, 0.001, 0.3, 0.1, 1.0));
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.shift, 0.02, 1e-15);
  EXPECT_NEAR(r.epsilon_lower_bound, 0.2, 1e-14);
  EXPECT_NEAR(r.bound, 91.69934957341144, 1e-9);
  EXPECT_EQ(r.iterations, 92);
  EXPECT_NEAR(r.gamma, 1.0 + 0.05 - 0.1, 1e-15);
}

TEST(CaseII, EpsilonBelowLowerBoundIsInfeasible) {
  const BoundResult r = iterations_case_ii(inputs(10.0, 0.05, 0.001, 0.19, 0.1, 1.0));
  EXPECT_FALSE(r.feasible);
  EXPECT_TRUE(std::isnan(r.bound));
}

TEST(CaseII, AlphaTooLargeIsInfeasible) {
  const BoundResult r = iterations_case_ii(inputs(10.0, 0.1, 0.0, 0.1, 0.1, 1.0));
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.violated.front(), "alpha c2 < 1");
}

TEST(Degeneracy, ExactColumnsMatchWithinOne) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double c = 1.0 + 200 * u(rng);
    const double xi0 = 0.1 + 10 * u(rng);
    const double eps = xi0 * (0.01 + 0.98 * u(rng));
    const double rho = 0.01 + 0.98 * u(rng);
    const BoundResult ri = iterations_case_i(inputs(c, 0, 0, eps, rho, xi0));
    if (ri.feasible) {
      const double exact = exact_iterations_case_i(c, eps, rho, xi0, true);
      EXPECT_NEAR(static_cast<double>(ri.iterations), exact, 1.0 + 1e-9);
    }
    const BoundResult rii = iterations_case_ii(inputs(c, 0, 0, eps, rho, xi0));
    ASSERT_TRUE(rii.feasible);
    const double exact = exact_iterations_case_ii(c, eps, rho, xi0);
    EXPECT_NEAR(static_cast<double>(rii.iterations), exact, 1.0 + 1e-9);
  }
}

TEST(Feasibility, CaseIIWithoutBetaAcceptsAnyEpsilon) {
  for (double eps : {1e-12, 1e-6, 0.5, 0.999}) {
    EXPECT_TRUE(iterations_case_ii(inputs(10.0, 0.02, 0.0, eps, 0.05, 1.0)).feasible) << eps;
  }
}

TEST(Feasibility, CaseIShrinkingEpsilonFlips) {
  const double c1 = 50.0, alpha = 0.0, beta = 1e-3, rho = 0.1;
  const double lb = case_i_epsilon_lower_bound(c1, alpha, beta, rho);
  EXPECT_TRUE(iterations_case_i(inputs(c1, alpha, beta, 1.05 * lb, rho, 10.0)).feasible);
  EXPECT_FALSE(iterations_case_i(inputs(c1, alpha, beta, 0.95 * lb, rho, 10.0)).feasible);
}

TEST(Feasibility, LowerBoundPredicatesAgree) {
  // eps > (c1/2)(alpha + sqrt(alpha^2 + 4 beta/(c1 rho)))  <=>  eps > beta c1 / (rho (eps - alpha c1))
  // for eps > alpha c1.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const double c1 = 1.0 + 100 * u(rng);
    const double alpha = 0.01 * u(rng);
    const double beta = 0.05 * u(rng);
    const double rho = 0.01 + 0.98 * u(rng);
    const double eps = alpha * c1 + 5 * u(rng);
    if (!(eps > alpha * c1)) continue;
    const bool first = case_i_epsilon_lower_bound(c1, alpha, beta, rho) < eps;
    const double rhs = beta * c1 / (rho * (eps - alpha * c1));
    if (std::abs(eps - rhs) < 1e-9 * eps) continue;  // on the boundary
    EXPECT_EQ(first, eps > rhs);
    ++checked;
  }
  EXPECT_GT(checked, 4000);
}

struct Grid {
  double c, alpha, beta, eps, rho, xi0;
};

std::vector<Grid> random_grid(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Grid> out;
  for (int k = 0; k < count; ++k) {
    const double c = 2.0 + 100 * u(rng);
    const double xi0 = 1.0 + 20 * u(rng);
    out.push_back({c, 0.02 * u(rng) / c, 0.2 * u(rng), xi0 * (0.05 + 0.9 * u(rng)), 0.05 + 0.9 * u(rng), xi0});
  }
  return out;
}

using BoundFn = BoundResult (*)(const BoundInputs&);

// Compares the real-valued bound at p and at p with one field moved up by `factor`.
template <class Field>
void check_direction(BoundFn fn, Field field, double factor, int sign, bool skip_log_branch) {
  int compared = 0;
  for (const Grid& g : random_grid(77, 4000)) {
    BoundInputs lo = inputs(g.c, g.alpha, g.beta, g.eps, g.rho, g.xi0);
    BoundInputs hi = lo;
    hi.*field *= factor;
    const BoundResult a = fn(lo), b = fn(hi);
    if (!a.feasible || !b.feasible) continue;
    if (skip_log_branch && (a.used_log_branch || b.used_log_branch)) continue;
    const double tol = 1e-9 * (1 + std::abs(a.bound));
    if (sign > 0) {
      EXPECT_LE(a.bound, b.bound + tol);
      EXPECT_LE(a.iterations, b.iterations);
    } else {
      EXPECT_GE(a.bound, b.bound - tol);
      EXPECT_GE(a.iterations, b.iterations);
    }
    ++compared;
  }
  EXPECT_GT(compared, 100);
}

TEST(Monotonicity, CaseIINondecreasingInAlphaAndBeta) {
  check_direction(iterations_case_ii, &BoundInputs::alpha, 1.3, +1, false);
  check_direction(iterations_case_ii, &BoundInputs::beta, 1.3, +1, false);
}

TEST(Monotonicity, CaseIINonincreasingInEpsilonAndRho) {
  check_direction(iterations_case_ii, &BoundInputs::epsilon, 1.1, -1, false);
  check_direction(iterations_case_ii, &BoundInputs::rho, 1.05, -1, false);
}

TEST(Monotonicity, CaseINondecreasingInAlpha) {
  check_direction(iterations_case_i, &BoundInputs::alpha, 1.3, +1, false);
}

TEST(Monotonicity, CaseINondecreasingInBetaOnClosedFormBranch) {
  check_direction(iterations_case_i, &BoundInputs::beta, 1.3, +1, true);
}

TEST(Monotonicity, CaseINonincreasingInEpsilonAndRho) {
  check_direction(iterations_case_i, &BoundInputs::epsilon, 1.1, -1, false);
  check_direction(iterations_case_i, &BoundInputs::rho, 1.05, -1, false);
}

TEST(Monotonicity, CaseILogBranchCanDecreaseInBeta) {
  // The 1/sigma log term shrinks faster than the other terms grow here, so a
  // larger beta yields a smaller bound. Kept as a regression marker.
  const BoundResult lo = iterations_case_i(inputs(64.419, 0.0, 0.1236, 5.646, 0.784, 15.505));
  const BoundResult hi = iterations_case_i(inputs(64.419, 0.0, 0.15, 5.646, 0.784, 15.505));
  ASSERT_TRUE(lo.feasible && hi.feasible);
  EXPECT_TRUE(lo.used_log_branch && hi.used_log_branch);
  EXPECT_NEAR(lo.bound, 23.01963932203135, 1e-9);
  EXPECT_NEAR(hi.bound, 22.66912508164572, 1e-9);
}

TEST(Constants, CompositeConvex) {
  EXPECT_DOUBLE_EQ(constants_composite_convex(10, 4.0, 3.0, 0.8).c1, 80.0);
  EXPECT_DOUBLE_EQ(constants_composite_convex(10, 4.0, 3.0, 0.8).c2, 100.0);
  EXPECT_DOUBLE_EQ(constants_composite_convex(10, 4.0, 4.0, 0.8).c1, 80.0);
  EXPECT_DOUBLE_EQ(constants_composite_convex(10, 2.0, 5.0, 0.8).c1, 100.0);
}

TEST(Constants, StronglyConvex) {
  const auto a = constants_strongly_convex(8, 0.5, 0.0);
  EXPECT_DOUBLE_EQ(a.mu, 0.5);
  EXPECT_DOUBLE_EQ(a.c2, 16.0);
  EXPECT_DOUBLE_EQ(a.alpha_max, 0.5 / 8);
  const auto b = constants_strongly_convex(8, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(b.mu, 1.0);
  EXPECT_DOUBLE_EQ(b.c2, 8.0);
  EXPECT_THROW(constants_strongly_convex(8, 1.5, 0.0), std::invalid_argument);
}

TEST(Constants, StronglyConvexMuGrowsTowardOne) {
  const double expected[] = {0.5, 0.75, 0.9545454545454546};
  double prev = 0.0;
  int k = 0;
  for (double mu_psi : {0.0, 1.0, 10.0}) {
    const double mu = constants_strongly_convex(4, 0.5, mu_psi).mu;
    EXPECT_NEAR(mu, expected[k++], 1e-15);
    EXPECT_GT(mu, prev);
    EXPECT_LT(mu, 1.0);
    prev = mu;
  }
}

TEST(Constants, Smooth) {
  EXPECT_DOUBLE_EQ(constants_smooth_convex(4.0), 8.0);
  EXPECT_DOUBLE_EQ(constants_smooth_strongly_convex(0.25), 4.0);
  EXPECT_GT(constants_smooth_strongly_convex(1.0 - 1e-12), 1.0);
  EXPECT_THROW(constants_smooth_strongly_convex(1.0), std::invalid_argument);
  EXPECT_THROW(constants_smooth_strongly_convex(0.0), std::invalid_argument);
}

CompositeObjective diagonal_objective(std::initializer_list<double> scale, std::vector<Index> sizes,
                                      const Vector& x_star) {
  const SparseMatrix a = diag(scale);
  QuadraticSmooth smooth(a, a * x_star, BlockPartition(std::move(sizes)));
  auto obj = CompositeObjective::with_quadratic_metric(std::move(smooth), SeparableRegularizer::zero());
  obj.set_optimum(0.0, x_star);
  return obj;
}

TEST(StrongConvexity, BlockDiagonalHessianGivesOne) {
  const auto obj = diagonal_objective({2.0, 1.0}, {1, 1}, vec({0.0, 0.0}));
  EXPECT_NEAR(strong_convexity_modulus(obj, {1.0, 1.0}), 1.0, 1e-12);
  EXPECT_NEAR(strong_convexity_modulus(obj, {2.0, 2.0}), 0.5, 1e-12);
}

TEST(StrongConvexity, CoupledColumnsBelowOne) {
  DenseMatrix a(2, 2);
  a << 1, 1, 0, 1;
  QuadraticSmooth smooth(testing::to_sparse(a), Vector::Zero(2), BlockPartition({1, 1}));
  const auto obj = CompositeObjective::with_quadratic_metric(std::move(smooth), SeparableRegularizer::zero());
  // Hessian [[1,1],[1,2]] against diag(1,2): eigenvalues 1 +- 1/sqrt(2).
  EXPECT_NEAR(strong_convexity_modulus(obj, {1.0, 1.0}), 1.0 - 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(RadiusSurrogate, IsotropicQuadratic) {
  const Vector xs = vec({1.0, -2.0});
  const auto obj = diagonal_objective({1.0, 1.0}, {2}, xs);
  const Vector x0 = vec({4.0, 2.0});
  const RadiusEstimate r = level_set_radius_surrogate(obj, x0, {1.0});
  EXPECT_NEAR(r.value, 5.0, 1e-12);
  EXPECT_NEAR(r.value, std::sqrt(2 * obj.value_at(x0)), 1e-12);
  EXPECT_EQ(r.provenance, "surrogate:point");
}

TEST(RadiusSurrogate, AtOptimumIsZero) {
  const Vector xs = vec({1.0, -2.0});
  const auto obj = diagonal_objective({1.0, 1.0}, {2}, xs);
  EXPECT_EQ(level_set_radius_surrogate(obj, xs, {1.0}).value, 0.0);
}

TEST(RadiusSurrogate, SamplingDominatesPointOnAnisotropicQuadratic) {
  const Vector xs = vec({0.0, 0.0});
  // f = 1/2 (4 x1^2 + x2^2); one block with B = I via separate unit blocks.
  const auto obj = diagonal_objective({2.0, 1.0}, {1, 1}, xs);
  const Vector x0 = vec({1.0, 0.0});
  const double point = level_set_radius_surrogate(obj, x0, {1.0, 1.0}).value;
  const RadiusEstimate sampled = level_set_radius_surrogate(obj, x0, {1.0, 1.0}, RadiusSampling{256, 5});
  EXPECT_GE(sampled.value, point - 1e-12);
  EXPECT_EQ(sampled.provenance, "surrogate:sampled(256)");
}

TEST(RadiusSurrogate, MissingOptimumIsConfigError) {
  QuadraticSmooth smooth(diag({1.0}), vec({1.0}), BlockPartition({1}));
  const auto obj = CompositeObjective::with_quadratic_metric(std::move(smooth), SeparableRegularizer::zero());
  EXPECT_THROW(level_set_radius_surrogate(obj, vec({0.0}), {1.0}), ConfigError);
}

}  // namespace
}  // namespace icd
