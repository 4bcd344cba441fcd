#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icd/block_space.hpp"

namespace icd {

/// A = [blockdiag(C_1..C_n); D_1 .. D_n] with C_i of size M_i x N_i and
/// linking rows D_i of size ell x N_i.
struct BlockAngularMatrix {
  std::vector<SparseMatrix> c;
  std::vector<SparseMatrix> d;
  Index ell = 0;

  Index num_blocks() const { return static_cast<Index>(c.size()); }
  /// m = sum M_i.
  Index diagonal_rows() const;
  Index rows() const { return diagonal_rows() + ell; }
  Index cols() const;
  BlockPartition partition() const;

  void validate() const;
  SparseMatrix assemble() const;
  /// [C_i; D_i] stacked (M_i + ell rows).
  SparseMatrix stacked_block(Index i) const;
};

enum class BlockShape { Tall, Wide };

struct GeneratorSpec {
  Index n = 4;
  Index m_i = 60;
  Index n_i = 20;
  Index ell = 5;
  Index nnz_per_column = 20;
  double d_fill = 0.1;
  BlockShape shape = BlockShape::Tall;
  /// Multiple of the identity added to the leading M_i columns of wide C_i.
  double identity_shift = 1.0;
  /// Scale applied to the linking entries.
  double d_scale = 1.0;
  std::uint64_t seed = 1;
  /// Rank checks run for blocks with N_i up to this size.
  Index rank_check_limit = 500;
};

struct GeneratedProblem {
  BlockAngularMatrix matrix;
  Vector x_star;
  Vector b;
  std::uint64_t seed_used = 0;
};

/// Random block-angular instance with b = A x* (so F* = 0). Rank-deficient
/// draws are retried with derived seeds, at most five attempts in total.
GeneratedProblem generate(const GeneratorSpec& spec);

/// b = A x* for a given matrix.
GeneratedProblem problem_from_matrix(BlockAngularMatrix matrix, Vector x_star);

/// P_i = C_i^T C_i; throws for wide blocks.
SparseMatrix build_preconditioner(const BlockAngularMatrix& mat, Index i);
/// P_i + rho_shift I.
SparseMatrix build_perturbed_preconditioner(const BlockAngularMatrix& mat, Index i,
                                            double rho_shift = 0.5);

/// Numerical rank from singular values above tol * sigma_max.
Index numerical_rank(const DenseMatrix& m, double rel_tol = 1e-10);

enum class SpectrumTarget { PinvB, PhatInvB, PhatInvP };

const char* to_string(SpectrumTarget t);
SpectrumTarget parse_spectrum_target(const std::string& name);

struct SpectrumReport {
  SpectrumTarget target = SpectrumTarget::PinvB;
  Index block = 0;
  Index dim = 0;
  double rho_shift = 0.0;
  double tolerance = 1e-8;
  /// Ascending.
  std::vector<double> eigenvalues;

  Index count_zero = 0;
  Index count_below_one = 0;  // in (0, 1)
  Index count_unit = 0;
  Index count_above_one = 0;

  Index rank_c = 0;
  Index rank_d = 0;  // r_i
  Index rank_a = 0;  // s_i

  /// trace(D P^{-1} D^T) from solves with the preconditioner.
  double trace_direct = 0.0;
  /// Same trace from the factorization: sum ||Y^T z_j||^2 (tall) or the
  /// W / W-perp eigen-expansion (wide).
  double trace_formula = 0.0;
  /// ||Z||_F^2 (tall case).
  double frobenius_bound = 0.0;
  /// ||Z C - D||_F / max(1, ||D||_F) (tall case).
  double factorization_residual = 0.0;
  /// Sum of eigenvalues against dim + trace (tall case).
  double eigen_sum = 0.0;
  /// Eigenvalues expected for P-hat^{-1} P: lambda_j/(lambda_j + rho) and zeros.
  std::vector<double> expected_eigenvalues;
  double expected_max_error = 0.0;
  /// Number of eigenvalues above one implied by inertia: #{sigma_j(D)^2 > rho}.
  Index inertia_above_one = 0;
  /// 1 + trace bound for the eigenvalues above one (wide case).
  double upper_bound = 0.0;

  /// Counts and identities agree with the theoretical classification.
  bool consistent = false;
  std::vector<std::string> notes;
};

/// Dense spectral analysis of block i in symmetric similar form.
SpectrumReport spectrum_report(const BlockAngularMatrix& mat, Index i, SpectrumTarget target,
                               double rho_shift = 0.5, Index dense_cap = 500);

}  // namespace icd
