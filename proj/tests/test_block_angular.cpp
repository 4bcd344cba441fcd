#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "icd/block_angular.hpp"
#include "test_util.hpp"

namespace icd {
namespace {

using testing::diag;

SparseMatrix row(std::initializer_list<double> values) {
  DenseMatrix m(1, static_cast<Index>(values.size()));
  Index k = 0;
  for (double v : values) m(0, k++) = v;
  return m.sparseView();
}

BlockAngularMatrix single_block(SparseMatrix c, SparseMatrix d) {
  BlockAngularMatrix mat;
  mat.ell = d.rows();
  mat.c.push_back(std::move(c));
  mat.d.push_back(std::move(d));
  return mat;
}

TEST(Generate, ForcedIdentityGivesIdentitySystem) {
  BlockAngularMatrix mat = single_block(diag({1.0, 1.0}), SparseMatrix(0, 2));
  const GeneratedProblem p = problem_from_matrix(std::move(mat), testing::vec({0.3, -1.2}));
  const DenseMatrix a(p.matrix.assemble());
  EXPECT_TRUE(a.isIdentity());
  EXPECT_EQ(p.b, p.x_star);
}

TEST(Generate, DeterministicUnderSeed) {
  GeneratorSpec spec;
  spec.seed = 12345;
  const GeneratedProblem a = generate(spec), b = generate(spec);
  EXPECT_EQ(a.seed_used, b.seed_used);
  EXPECT_TRUE(a.matrix.assemble().isApprox(b.matrix.assemble(), 0.0));
  EXPECT_EQ(a.x_star, b.x_star);
  EXPECT_EQ(a.b, b.b);
  spec.seed = 12346;
  EXPECT_NE(generate(spec).x_star, a.x_star);
}

TEST(Generate, DefaultInstanceShapeAndDensity) {
  GeneratorSpec spec;
  spec.n = 4;
  spec.m_i = 60;
  spec.n_i = 20;
  spec.ell = 5;
  spec.seed = 3;
  const GeneratedProblem p = generate(spec);
  const SparseMatrix a = p.matrix.assemble();
  EXPECT_EQ(a.rows(), 4 * 60 + 5);
  EXPECT_EQ(a.cols(), 80);
  EXPECT_EQ(0.5 * (a * p.x_star - p.b).squaredNorm(), 0.0);
  for (const SparseMatrix& c : p.matrix.c) {
    for (Index j = 0; j < c.outerSize(); ++j) {
      const Index nnz = c.col(j).nonZeros();
      EXPECT_GE(nnz, 15);
      EXPECT_LE(nnz, 25);
    }
  }
}

TEST(Generate, AssembledLayoutIsBlockAngular) {
  GeneratorSpec spec;
  spec.n = 3;
  spec.m_i = 12;
  spec.n_i = 4;
  spec.ell = 2;
  spec.nnz_per_column = 3;
  spec.d_fill = 0.5;
  const GeneratedProblem p = generate(spec);
  const DenseMatrix a(p.matrix.assemble());
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 3; ++j) {
      const DenseMatrix blk = a.block(12 * i, 4 * j, 12, 4);
      if (i == j) {
        EXPECT_TRUE(blk.isApprox(DenseMatrix(p.matrix.c[static_cast<std::size_t>(i)]), 0.0));
      } else {
        EXPECT_TRUE(blk.isZero(0.0));
      }
    }
    EXPECT_TRUE(a.block(36, 4 * i, 2, 4).isApprox(DenseMatrix(p.matrix.d[static_cast<std::size_t>(i)]), 0.0));
    const DenseMatrix stacked(p.matrix.stacked_block(i));
    EXPECT_EQ(stacked.rows(), 14);
  }
}

TEST(Generate, WideBlocksHaveFullRowRank) {
  GeneratorSpec spec;
  spec.shape = BlockShape::Wide;
  spec.n = 2;
  spec.m_i = 10;
  spec.n_i = 25;
  spec.ell = 3;
  spec.nnz_per_column = 4;
  const GeneratedProblem p = generate(spec);
  for (const SparseMatrix& c : p.matrix.c) EXPECT_EQ(numerical_rank(DenseMatrix(c)), 10);
}

TEST(Generate, InvalidSpecRejected) {
  GeneratorSpec spec;
  spec.n = 0;
  EXPECT_THROW(generate(spec), ConfigError);
  spec = GeneratorSpec{};
  spec.shape = BlockShape::Wide;  // default 60 x 20 is tall
  EXPECT_THROW(generate(spec), ConfigError);
}

TEST(Preconditioner, IdentityBlock) {
  const auto mat = single_block(diag({1.0, 1.0}), row({1.0, 0.0}));
  EXPECT_TRUE(DenseMatrix(build_preconditioner(mat, 0)).isIdentity());
}

TEST(Preconditioner, WideBlockNeedsPerturbation) {
  const auto mat = single_block(row({1.0, 0.0}), row({0.0, 1.0}));
  EXPECT_THROW(build_preconditioner(mat, 0), StructuralError);
  const DenseMatrix phat(build_perturbed_preconditioner(mat, 0, 0.5));
  EXPECT_DOUBLE_EQ(phat(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(phat(1, 1), 0.5);
  EXPECT_EQ(phat(0, 1), 0.0);
  EXPECT_THROW(build_perturbed_preconditioner(mat, 0, 0.0), std::invalid_argument);
}

TEST(Preconditioner, RandomTallIsSpd) {
  GeneratorSpec spec;
  spec.seed = 9;
  const GeneratedProblem p = generate(spec);
  for (Index i = 0; i < spec.n; ++i) {
    const DenseMatrix pm(build_preconditioner(p.matrix, i));
    EXPECT_TRUE(pm.isApprox(pm.transpose(), 1e-14));
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<DenseMatrix>(pm).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Spectrum, TallTwoByTwo) {
  const auto mat = single_block(diag({1.0, 1.0}), row({1.0, 0.0}));
  const SpectrumReport r = spectrum_report(mat, 0, SpectrumTarget::PinvB);
  ASSERT_EQ(r.eigenvalues.size(), 2u);
  EXPECT_NEAR(r.eigenvalues[0], 1.0, 1e-12);
  EXPECT_NEAR(r.eigenvalues[1], 2.0, 1e-12);
  EXPECT_EQ(r.rank_d, 1);
  EXPECT_EQ(r.count_above_one, 1);
  EXPECT_EQ(r.count_unit, 1);
  EXPECT_NEAR(r.trace_direct, 1.0, 1e-12);
  EXPECT_NEAR(r.trace_formula, 1.0, 1e-12);
  EXPECT_NEAR(r.frobenius_bound, 1.0, 1e-12);
  EXPECT_TRUE(r.consistent);
}

TEST(Spectrum, ZeroLinkingBlockGivesUnitSpectrum) {
  GeneratorSpec spec;
  spec.n = 1;
  spec.d_scale = 0.0;
  const GeneratedProblem p = generate(spec);
  const SpectrumReport r = spectrum_report(p.matrix, 0, SpectrumTarget::PinvB);
  for (double ev : r.eigenvalues) EXPECT_NEAR(ev, 1.0, 1e-10);
  EXPECT_EQ(r.count_unit, spec.n_i);
  EXPECT_EQ(r.rank_d, 0);
  EXPECT_TRUE(r.consistent);
}

TEST(Spectrum, WideTwoByTwo) {
  const auto mat = single_block(row({1.0, 0.0}), row({0.0, 1.0}));
  const SpectrumReport b = spectrum_report(mat, 0, SpectrumTarget::PhatInvB, 0.5);
  ASSERT_EQ(b.eigenvalues.size(), 2u);
  EXPECT_NEAR(b.eigenvalues[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(b.eigenvalues[1], 2.0, 1e-12);
  EXPECT_EQ(b.rank_a, 2);
  EXPECT_EQ(b.rank_d, 1);
  EXPECT_EQ(b.count_zero, 0);
  EXPECT_EQ(b.count_below_one, 1);
  EXPECT_EQ(b.count_above_one, 1);
  EXPECT_NEAR(b.upper_bound, 3.0, 1e-12);
  EXPECT_NEAR(b.trace_direct, b.trace_formula, 1e-12);
  EXPECT_TRUE(b.consistent);

  const SpectrumReport pp = spectrum_report(mat, 0, SpectrumTarget::PhatInvP, 0.5);
  ASSERT_EQ(pp.eigenvalues.size(), 2u);
  EXPECT_NEAR(pp.eigenvalues[0], 0.0, 1e-12);
  EXPECT_NEAR(pp.eigenvalues[1], 2.0 / 3.0, 1e-12);
  EXPECT_EQ(pp.count_zero, 1);
  EXPECT_TRUE(pp.consistent);
}

TEST(Spectrum, PinvBOnWideBlockIsStructuralError) {
  const auto mat = single_block(row({1.0, 0.0}), row({0.0, 1.0}));
  EXPECT_THROW(spectrum_report(mat, 0, SpectrumTarget::PinvB), StructuralError);
}

TEST(Spectrum, CapExceededIsConfigError) {
  GeneratorSpec spec;
  spec.n = 1;
  const GeneratedProblem p = generate(spec);
  EXPECT_THROW(spectrum_report(p.matrix, 0, SpectrumTarget::PinvB, 0.5, 10), ConfigError);
}

TEST(Spectrum, TallRandomInstancesMatchClassification) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GeneratorSpec spec;
    spec.n = 1;
    spec.m_i = 40;
    spec.n_i = 15;
    spec.ell = 4;
    spec.nnz_per_column = 8;
    spec.seed = seed;
    const GeneratedProblem p = generate(spec);
    const SpectrumReport r = spectrum_report(p.matrix, 0, SpectrumTarget::PinvB);
    EXPECT_EQ(r.count_unit, 15 - r.rank_d);
    EXPECT_EQ(r.count_above_one, r.rank_d);
    EXPECT_NEAR(r.eigen_sum, 15 + r.trace_direct, 1e-10 * (15 + r.trace_direct));
    EXPECT_NEAR(r.trace_direct, r.trace_formula, 1e-10 * (1 + r.trace_direct));
    EXPECT_LE(r.trace_formula, r.frobenius_bound * (1 + 1e-10));
    EXPECT_TRUE(r.consistent) << "seed " << seed;
  }
}

TEST(Spectrum, SquareInvertibleBlockMeetsFrobeniusBound) {
  GeneratorSpec spec;
  spec.n = 1;
  spec.m_i = 12;
  spec.n_i = 12;
  spec.ell = 3;
  spec.nnz_per_column = 12;
  spec.d_fill = 0.5;
  const GeneratedProblem p = generate(spec);
  const SpectrumReport r = spectrum_report(p.matrix, 0, SpectrumTarget::PinvB);
  EXPECT_NEAR(r.trace_formula, r.frobenius_bound, 1e-10 * (1 + r.frobenius_bound));
}

GeneratorSpec wide_spec(std::uint64_t seed) {
  GeneratorSpec spec;
  spec.shape = BlockShape::Wide;
  spec.n = 1;
  spec.m_i = 8;
  spec.n_i = 14;
  spec.ell = 6;
  spec.nnz_per_column = 3;
  spec.d_fill = 0.3;
  spec.seed = seed;
  return spec;
}

TEST(Spectrum, WidePerturbedPreconditionerOnOriginal) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GeneratedProblem p = generate(wide_spec(seed));
    const SpectrumReport r = spectrum_report(p.matrix, 0, SpectrumTarget::PhatInvP, 0.5);
    EXPECT_EQ(r.count_zero, 14 - 8);
    EXPECT_LE(r.expected_max_error, 1e-10);
    EXPECT_TRUE(r.consistent);
  }
}

TEST(Spectrum, WideNonzeroEigenvaluesApproachOneAsShiftShrinks) {
  const GeneratedProblem p = generate(wide_spec(4));
  std::vector<double> prev;
  for (double rho : {0.5, 0.05, 0.005}) {
    const SpectrumReport r = spectrum_report(p.matrix, 0, SpectrumTarget::PhatInvP, rho);
    std::vector<double> nonzero(r.eigenvalues.end() - 8, r.eigenvalues.end());
    for (double ev : nonzero) EXPECT_LT(ev, 1.0);
    if (!prev.empty()) {
      for (std::size_t k = 0; k < nonzero.size(); ++k) EXPECT_GT(nonzero[k], prev[k]);
    }
    prev = nonzero;
  }
  EXPECT_GT(prev.front(), 0.9);
}

TEST(Spectrum, WideTraceExpansionMatchesDirectTrace) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GeneratedProblem p = generate(wide_spec(seed));
    const SpectrumReport r = spectrum_report(p.matrix, 0, SpectrumTarget::PhatInvB, 0.5);
    EXPECT_NEAR(r.trace_direct, r.trace_formula, 1e-10 * (1 + r.trace_direct));
    EXPECT_EQ(r.count_zero + r.count_below_one + r.count_unit + r.count_above_one, 14);
  }
}

TEST(Spectrum, WideCountsFollowLinkingSingularValues) {
  // The number of eigenvalues above one tracks #{sigma_j(D)^2 > rho}. With D
  // scaled so every nonzero sigma^2 exceeds rho, the three-way split holds.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GeneratorSpec spec = wide_spec(seed);
    const GeneratedProblem probe = generate(spec);
    const Eigen::JacobiSVD<DenseMatrix> svd{DenseMatrix(probe.matrix.d[0])};
    const auto& s = svd.singularValues();
    double smin = s[0];
    for (Index k = 0; k < s.size(); ++k)
      if (s[k] > 1e-10 * s[0]) smin = s[k];
    spec.d_scale = std::sqrt(2 * 0.5) / smin;
    const GeneratedProblem p = generate(spec);
    const SpectrumReport r = spectrum_report(p.matrix, 0, SpectrumTarget::PhatInvB, 0.5);
    EXPECT_EQ(r.inertia_above_one, r.rank_d);
    EXPECT_EQ(r.count_zero, 14 - r.rank_a);
    EXPECT_EQ(r.count_below_one, r.rank_a - r.rank_d);
    EXPECT_EQ(r.count_above_one, r.rank_d);
    EXPECT_LE(r.eigenvalues.back(), r.upper_bound);
    EXPECT_TRUE(r.consistent);
  }
}

TEST(Spectrum, WideSmallLinkingValuesBreakThreeWaySplit) {
  // Linking singular values below sqrt(rho) push their eigenvalues under one.
  const auto mat = single_block(row({1.0, 0.0}), row({0.0, 0.5}));
  const SpectrumReport r = spectrum_report(mat, 0, SpectrumTarget::PhatInvB, 0.5);
  EXPECT_EQ(r.rank_d, 1);
  EXPECT_EQ(r.inertia_above_one, 0);
  EXPECT_EQ(r.count_above_one, 0);
  EXPECT_FALSE(r.consistent);
}

TEST(Spectrum, TargetNamesRoundTrip) {
  for (auto t : {SpectrumTarget::PinvB, SpectrumTarget::PhatInvB, SpectrumTarget::PhatInvP}) {
    EXPECT_EQ(parse_spectrum_target(to_string(t)), t);
  }
  EXPECT_THROW(parse_spectrum_target("bogus"), ConfigError);
}

}  // namespace
}  // namespace icd
