#pragma once

#include <memory>
#include <span>
#include <vector>

#include "icd/types.hpp"

namespace icd {

/// Decomposition of R^N into n contiguous blocks of sizes N_1..N_n.
///
/// Block i occupies the index range [offset(i), offset(i) + size(i)). Any
/// column permutation of the coordinates is expected to have been applied to
/// the data before the partition is built.
class BlockPartition {
 public:
  BlockPartition() = default;
  explicit BlockPartition(std::vector<Index> sizes);

  static BlockPartition uniform(Index num_blocks, Index block_size);

  Index num_blocks() const { return static_cast<Index>(sizes_.size()); }
  Index dim() const { return offsets_.empty() ? 0 : offsets_.back(); }
  Index size(Index i) const;
  Index offset(Index i) const;
  const std::vector<Index>& sizes() const { return sizes_; }

  auto block(const Vector& x, Index i) const { return x.segment(offset(i), size(i)); }
  auto block(Vector& x, Index i) const { return x.segment(offset(i), size(i)); }

  /// Reassembles a full vector from one part per block.
  Vector scatter(std::span<const Vector> parts) const;

  void check_dim(const Vector& x) const;

  friend bool operator==(const BlockPartition&, const BlockPartition&) = default;

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_;  // num_blocks + 1 entries
};

/// Copy of x^{(i)}.
Vector block_view(const Vector& x, Index i, const BlockPartition& partition);

/// Symmetric positive definite block operator B_i.
///
/// Either held explicitly as a sparse matrix, or implicitly as the Gram
/// operator t -> A_i^T (A_i t) + shift * t of a column block A_i, in which
/// case B_i is never formed unless assemble() is called.
class SpdOperator {
 public:
  SpdOperator() = default;

  static SpdOperator explicit_matrix(SparseMatrix matrix);
  static SpdOperator gram(std::shared_ptr<const SparseMatrix> columns, double shift = 0.0);

  Index dim() const;
  bool is_gram() const { return static_cast<bool>(columns_); }
  double shift() const { return shift_; }
  /// Column block A_i for Gram operators; throws for explicit ones.
  const SparseMatrix& columns() const;

  void apply(const Vector& t, Vector& out) const;
  Vector apply(const Vector& t) const;
  double quadratic_form(const Vector& t) const;

  /// Explicit sparse B_i (forms A_i^T A_i for Gram operators).
  SparseMatrix assemble() const;

 private:
  SparseMatrix matrix_;
  std::shared_ptr<const SparseMatrix> columns_;
  double shift_ = 0.0;
};

/// Per-block norms and Lipschitz constants: B_i and l_i.
struct BlockMetric {
  std::vector<SpdOperator> operators;
  std::vector<double> lipschitz;

  Index num_blocks() const { return static_cast<Index>(operators.size()); }
  void validate(const BlockPartition& partition) const;
};

/// ||t||_(i) = <B_i t, t>^{1/2}.
double block_norm(const Vector& t, const SpdOperator& op);

/// ||g||*_(i) = <B_i^{-1} g, g>^{1/2}. Dense Cholesky for blocks up to
/// `dense_limit`, otherwise CG on the assembled operator to 1e-12.
double conjugate_block_norm(const Vector& g, const SpdOperator& op, Index dense_limit = 500);

class WeightVector {
 public:
  explicit WeightVector(std::vector<double> w);
  static WeightVector ones(Index n) { return WeightVector(std::vector<double>(n, 1.0)); }

  Index size() const { return static_cast<Index>(w_.size()); }
  double operator[](Index i) const { return w_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& values() const { return w_; }

 private:
  std::vector<double> w_;
};

/// ||x||_w = (sum_i w_i ||x^{(i)}||_(i)^2)^{1/2}.
double weighted_norm(const Vector& x, const WeightVector& w, const BlockPartition& partition,
                     const BlockMetric& metric);

/// Dual norm (sum_i w_i^{-1} (||y^{(i)}||*_(i))^2)^{1/2}.
double conjugate_weighted_norm(const Vector& y, const WeightVector& w,
                               const BlockPartition& partition, const BlockMetric& metric);

}  // namespace icd
