#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "icd/block_space.hpp"

namespace icd {

/// f(x) = 1/2 ||Ax - b||^2 with A split column-wise into blocks A_i.
class QuadraticSmooth {
 public:
  QuadraticSmooth(SparseMatrix a, Vector b, BlockPartition partition);

  const SparseMatrix& matrix() const { return a_; }
  const Vector& rhs() const { return b_; }
  const BlockPartition& partition() const { return partition_; }
  Index rows() const { return a_.rows(); }
  Index cols() const { return a_.cols(); }

  const SparseMatrix& block_columns(Index i) const { return *blocks_[idx(i)]; }
  const std::shared_ptr<const SparseMatrix>& shared_block(Index i) const { return blocks_[idx(i)]; }
  /// Sorted row indices touched by A_i.
  const std::vector<Index>& block_rows(Index i) const { return block_rows_[idx(i)]; }

 private:
  std::size_t idx(Index i) const {
    partition_.size(i);  // range check
    return static_cast<std::size_t>(i);
  }

  SparseMatrix a_;
  Vector b_;
  BlockPartition partition_;
  std::vector<std::shared_ptr<const SparseMatrix>> blocks_;
  std::vector<std::vector<Index>> block_rows_;
};

enum class RegularizerKind { Zero, L1, GroupLasso };

/// Block separable Psi(x) = sum_i Psi_i(x^{(i)}).
class SeparableRegularizer {
 public:
  static SeparableRegularizer zero() { return {}; }
  static SeparableRegularizer l1(double lambda);
  static SeparableRegularizer group_lasso(double lambda, std::vector<double> group_sizes);

  RegularizerKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  /// Scale of the block norm: lambda for L1, lambda*sqrt(d_i) for group lasso, 0 for Zero.
  double block_weight(Index i) const;
  double value(Index i, const Vector& v) const;
  bool is_zero() const { return kind_ == RegularizerKind::Zero || lambda_ == 0.0; }
  void validate(const BlockPartition& partition) const;

 private:
  RegularizerKind kind_ = RegularizerKind::Zero;
  double lambda_ = 0.0;
  std::vector<double> d_;
};

/// Psi_i(v) for the configured variant.
double regularizer_value(const SeparableRegularizer& reg, Index i, const Vector& v);

struct QuadraticMetricOptions {
  bool detect_rank_deficiency = true;
  /// Largest block checked with a dense eigensolve; larger blocks use a sparse LDL^T.
  Index dense_check_limit = 500;
  double rank_tolerance = 1e-12;
};

/// l_i = 1 and B_i = A_i^T A_i, shifted by 1e-8 ||A_i||_F^2 / N_i when A_i is
/// (numerically) column rank deficient.
BlockMetric quadratic_metric(const QuadraticSmooth& smooth, const QuadraticMetricOptions& opts = {});

/// F = f + Psi together with the block metric used by the model V_i.
class CompositeObjective {
 public:
  CompositeObjective(QuadraticSmooth smooth, SeparableRegularizer reg, BlockMetric metric);

  static CompositeObjective with_quadratic_metric(QuadraticSmooth smooth, SeparableRegularizer reg,
                                                  const QuadraticMetricOptions& opts = {});

  const QuadraticSmooth& smooth() const { return smooth_; }
  const SeparableRegularizer& regularizer() const { return reg_; }
  const BlockMetric& metric() const { return metric_; }
  const BlockPartition& partition() const { return smooth_.partition(); }
  Index num_blocks() const { return partition().num_blocks(); }
  Index dim() const { return partition().dim(); }

  void set_optimum(double f_star, std::optional<Vector> x_star = std::nullopt);
  const std::optional<double>& optimal_value() const { return f_star_; }
  const std::optional<Vector>& optimal_point() const { return x_star_; }

  double lipschitz(Index i) const { return metric_.lipschitz[static_cast<std::size_t>(i)]; }
  const SpdOperator& block_operator(Index i) const {
    return metric_.operators[static_cast<std::size_t>(i)];
  }

  /// F evaluated from scratch (recomputes Ax - b).
  double value_at(const Vector& x) const;

 private:
  QuadraticSmooth smooth_;
  SeparableRegularizer reg_;
  BlockMetric metric_;
  std::optional<double> f_star_;
  std::optional<Vector> x_star_;
};

/// Iterate x together with r = Ax - b and cached Psi_i(x^{(i)}).
///
/// Single owner; the objective must outlive the state.
class ResidualState {
 public:
  ResidualState(const CompositeObjective& objective, Vector x0);

  const CompositeObjective& objective() const { return *obj_; }
  const Vector& x() const { return x_; }
  const Vector& residual() const { return r_; }

  double smooth_value() const { return 0.5 * r_sq_; }
  double regularizer_value() const;
  double block_regularizer(Index i) const { return psi_[static_cast<std::size_t>(i)]; }
  double value() const { return smooth_value() + regularizer_value(); }

  /// x^{(i)} += t and r += A_i t in O(nnz(A_i)).
  void apply_update(Index i, const Vector& t);

  /// ||r - (Ax - b)||.
  double residual_drift() const;
  /// Recomputes r, ||r||^2 and the Psi cache from x.
  void resync();

 private:
  const CompositeObjective* obj_;
  Vector x_;
  Vector r_;
  double r_sq_ = 0.0;
  std::vector<double> psi_;
  Vector scratch_;  // length M, kept zero between updates
};

double eval_f(const ResidualState& state);
double eval_F(const ResidualState& state);

/// A_i^T r.
Vector block_gradient(const ResidualState& state, Index i);

/// V_i(x,t) = <grad_i f, t> + (l_i/2) ||t||_(i)^2 + Psi_i(x^{(i)} + t).
double model_value(const ResidualState& state, Index i, const Vector& t);
double model_value(const ResidualState& state, Index i, const Vector& t, const Vector& gradient);

/// H(x,T) = f(x) + sum_i V_i(x, T^{(i)}).
double eval_H(const ResidualState& state, const Vector& step);
/// H(x,T) = f(x) + <grad f, T> + 1/2 ||T||_l^2 + Psi(x + T), evaluated directly.
double eval_H_direct(const ResidualState& state, const Vector& step);

}  // namespace icd
