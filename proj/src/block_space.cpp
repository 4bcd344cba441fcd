#include "icd/block_space.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <string>

namespace icd {

BlockPartition::BlockPartition(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw std::invalid_argument("BlockPartition: at least one block required");
  offsets_.reserve(sizes_.size() + 1);
  offsets_.push_back(0);
  for (Index s : sizes_) {
    if (s < 1) throw std::invalid_argument("BlockPartition: block sizes must be positive");
    offsets_.push_back(offsets_.back() + s);
  }
}

BlockPartition BlockPartition::uniform(Index num_blocks, Index block_size) {
  return BlockPartition(std::vector<Index>(static_cast<std::size_t>(num_blocks), block_size));
}

Index BlockPartition::size(Index i) const {
  if (i < 0 || i >= num_blocks()) {
    throw std::out_of_range("block index " + std::to_string(i) + " out of range");
  }
  return sizes_[static_cast<std::size_t>(i)];
}

Index BlockPartition::offset(Index i) const {
  if (i < 0 || i >= num_blocks()) {
    throw std::out_of_range("block index " + std::to_string(i) + " out of range");
  }
  return offsets_[static_cast<std::size_t>(i)];
}

void BlockPartition::check_dim(const Vector& x) const {
  if (x.size() != dim()) {
    throw std::invalid_argument("dimension mismatch: vector has " + std::to_string(x.size()) +
                                " entries, partition has " + std::to_string(dim()));
  }
}

Vector BlockPartition::scatter(std::span<const Vector> parts) const {
  if (static_cast<Index>(parts.size()) != num_blocks()) {
    throw std::invalid_argument("scatter: expected one part per block");
  }
  Vector x(dim());
  for (Index i = 0; i < num_blocks(); ++i) {
    const Vector& p = parts[static_cast<std::size_t>(i)];
    if (p.size() != size(i)) throw std::invalid_argument("scatter: part size mismatch");
    block(x, i) = p;
  }
  return x;
}

Vector block_view(const Vector& x, Index i, const BlockPartition& partition) {
  partition.check_dim(x);
  return partition.block(x, i);
}

SpdOperator SpdOperator::explicit_matrix(SparseMatrix matrix) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("SpdOperator: matrix not square");
  SpdOperator op;
  op.matrix_ = std::move(matrix);
  op.matrix_.makeCompressed();
  return op;
}

SpdOperator SpdOperator::gram(std::shared_ptr<const SparseMatrix> columns, double shift) {
  if (!columns) throw std::invalid_argument("SpdOperator: null column block");
  if (shift < 0.0) throw std::invalid_argument("SpdOperator: negative shift");
  SpdOperator op;
  op.columns_ = std::move(columns);
  op.shift_ = shift;
  return op;
}

Index SpdOperator::dim() const { return columns_ ? columns_->cols() : matrix_.rows(); }

const SparseMatrix& SpdOperator::columns() const {
  if (!columns_) throw std::logic_error("SpdOperator: not a Gram operator");
  return *columns_;
}

void SpdOperator::apply(const Vector& t, Vector& out) const {
  if (t.size() != dim()) throw std::invalid_argument("SpdOperator::apply: dimension mismatch");
  if (columns_) {
    Vector at = (*columns_) * t;
    out.noalias() = columns_->transpose() * at;
    if (shift_ != 0.0) out += shift_ * t;
  } else {
    out.noalias() = matrix_ * t;
  }
}

Vector SpdOperator::apply(const Vector& t) const {
  Vector out(dim());
  apply(t, out);
  return out;
}

double SpdOperator::quadratic_form(const Vector& t) const {
  if (columns_) {
    const double at = ((*columns_) * t).squaredNorm();
    return at + shift_ * t.squaredNorm();
  }
  return t.dot(matrix_ * t);
}

SparseMatrix SpdOperator::assemble() const {
  if (!columns_) return matrix_;
  SparseMatrix b = (columns_->transpose() * (*columns_)).pruned();
  if (shift_ != 0.0) {
    SparseMatrix id(b.rows(), b.cols());
    id.setIdentity();
    b += shift_ * id;
  }
  b.makeCompressed();
  return b;
}

void BlockMetric::validate(const BlockPartition& partition) const {
  if (num_blocks() != partition.num_blocks() ||
      static_cast<Index>(lipschitz.size()) != partition.num_blocks()) {
    throw std::invalid_argument("BlockMetric: one operator and one Lipschitz constant per block");
  }
  for (Index i = 0; i < num_blocks(); ++i) {
    if (operators[static_cast<std::size_t>(i)].dim() != partition.size(i)) {
      throw std::invalid_argument("BlockMetric: operator " + std::to_string(i) +
                                  " does not match block size");
    }
    if (!(lipschitz[static_cast<std::size_t>(i)] > 0.0)) {
      throw std::invalid_argument("BlockMetric: Lipschitz constants must be positive");
    }
  }
}

double block_norm(const Vector& t, const SpdOperator& op) {
  const double q = op.quadratic_form(t);
  if (q < 0.0) throw StructuralError("block_norm: operator is not positive semidefinite");
  return std::sqrt(q);
}

double conjugate_block_norm(const Vector& g, const SpdOperator& op, Index dense_limit) {
  if (g.size() != op.dim()) throw std::invalid_argument("conjugate_block_norm: dimension mismatch");
  if (g.isZero(0.0)) return 0.0;
  const SparseMatrix b = op.assemble();
  Vector sol;
  if (op.dim() <= dense_limit) {
    Eigen::LLT<DenseMatrix> llt{DenseMatrix(b)};
    if (llt.info() != Eigen::Success) {
      throw StructuralError("conjugate_block_norm: B_i is not positive definite");
    }
    sol = llt.solve(g);
  } else {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-12);
    cg.setMaxIterations(10 * op.dim());
    cg.compute(b);
    sol = cg.solve(g);
    if (cg.info() != Eigen::Success) {
      throw StructuralError("conjugate_block_norm: CG did not converge (B_i not SPD?)");
    }
  }
  const double q = g.dot(sol);
  if (q < 0.0) throw StructuralError("conjugate_block_norm: B_i is not positive definite");
  return std::sqrt(q);
}

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
  for (double v : w_) {
    if (!(v > 0.0)) throw std::invalid_argument("WeightVector: weights must be positive");
  }
}

double weighted_norm(const Vector& x, const WeightVector& w, const BlockPartition& partition,
                     const BlockMetric& metric) {
  partition.check_dim(x);
  if (w.size() != partition.num_blocks() || metric.num_blocks() != partition.num_blocks()) {
    throw std::invalid_argument("weighted_norm: weights/metric do not match partition");
  }
  double sum = 0.0;
  for (Index i = 0; i < partition.num_blocks(); ++i) {
    const Vector xi = partition.block(x, i);
    sum += w[i] * metric.operators[static_cast<std::size_t>(i)].quadratic_form(xi);
  }
  return std::sqrt(sum);
}

double conjugate_weighted_norm(const Vector& y, const WeightVector& w,
                               const BlockPartition& partition, const BlockMetric& metric) {
  partition.check_dim(y);
  if (w.size() != partition.num_blocks() || metric.num_blocks() != partition.num_blocks()) {
    throw std::invalid_argument("conjugate_weighted_norm: weights/metric do not match partition");
  }
  double sum = 0.0;
  for (Index i = 0; i < partition.num_blocks(); ++i) {
    const double c = conjugate_block_norm(partition.block(y, i),
                                          metric.operators[static_cast<std::size_t>(i)]);
    sum += c * c / w[i];
  }
  return std::sqrt(sum);
}

}  // namespace icd
