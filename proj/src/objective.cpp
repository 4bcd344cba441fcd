#include "icd/objective.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace icd {

QuadraticSmooth::QuadraticSmooth(SparseMatrix a, Vector b, BlockPartition partition)
    : a_(std::move(a)), b_(std::move(b)), partition_(std::move(partition)) {
  if (a_.rows() != b_.size()) throw std::invalid_argument("QuadraticSmooth: rows(A) != size(b)");
  if (a_.cols() != partition_.dim()) {
    throw std::invalid_argument("QuadraticSmooth: cols(A) does not match the block partition");
  }
  a_.makeCompressed();
  const Index n = partition_.num_blocks();
  blocks_.reserve(static_cast<std::size_t>(n));
  block_rows_.resize(static_cast<std::size_t>(n));
  std::vector<char> seen(static_cast<std::size_t>(a_.rows()), 0);
  for (Index i = 0; i < n; ++i) {
    SparseMatrix ai = a_.middleCols(partition_.offset(i), partition_.size(i));
    ai.makeCompressed();
    auto& rows = block_rows_[static_cast<std::size_t>(i)];
    for (Index c = 0; c < ai.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(ai, c); it; ++it) {
        auto& s = seen[static_cast<std::size_t>(it.row())];
        if (!s) {
          s = 1;
          rows.push_back(it.row());
        }
      }
    }
    for (Index r : rows) seen[static_cast<std::size_t>(r)] = 0;
    std::sort(rows.begin(), rows.end());
    blocks_.push_back(std::make_shared<const SparseMatrix>(std::move(ai)));
  }
}

SeparableRegularizer SeparableRegularizer::l1(double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("L1 regularizer: lambda must be >= 0");
  SeparableRegularizer r;
  r.kind_ = RegularizerKind::L1;
  r.lambda_ = lambda;
  return r;
}

SeparableRegularizer SeparableRegularizer::group_lasso(double lambda, std::vector<double> group_sizes) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("group lasso: lambda must be >= 0");
  for (double d : group_sizes) {
    if (!(d > 0.0)) throw std::invalid_argument("group lasso: weights d_i must be positive");
  }
  SeparableRegularizer r;
  r.kind_ = RegularizerKind::GroupLasso;
  r.lambda_ = lambda;
  r.d_ = std::move(group_sizes);
  return r;
}

double SeparableRegularizer::block_weight(Index i) const {
  switch (kind_) {
    case RegularizerKind::Zero:
      return 0.0;
    case RegularizerKind::L1:
      return lambda_;
    case RegularizerKind::GroupLasso:
      if (i < 0 || i >= static_cast<Index>(d_.size())) {
        throw std::out_of_range("group lasso: no weight for block " + std::to_string(i));
      }
      return lambda_ * std::sqrt(d_[static_cast<std::size_t>(i)]);
  }
  return 0.0;
}

double SeparableRegularizer::value(Index i, const Vector& v) const {
  switch (kind_) {
    case RegularizerKind::Zero:
      return 0.0;
    case RegularizerKind::L1:
      return lambda_ * v.lpNorm<1>();
    case RegularizerKind::GroupLasso:
      return block_weight(i) * v.norm();
  }
  return 0.0;
}

void SeparableRegularizer::validate(const BlockPartition& partition) const {
  if (kind_ == RegularizerKind::GroupLasso &&
      static_cast<Index>(d_.size()) != partition.num_blocks()) {
    throw std::invalid_argument("group lasso: one weight d_i per block required");
  }
}

double regularizer_value(const SeparableRegularizer& reg, Index i, const Vector& v) {
  return reg.value(i, v);
}

namespace {

bool rank_deficient(const SparseMatrix& ai, const QuadraticMetricOptions& opts) {
  const SparseMatrix gram = ai.transpose() * ai;
  if (ai.cols() <= opts.dense_check_limit) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(DenseMatrix(gram), Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    const double top = std::max(ev.maxCoeff(), 0.0);
    return top == 0.0 || ev.minCoeff() <= opts.rank_tolerance * top;
  }
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return true;
  const Vector d = ldlt.vectorD();
  const double top = d.cwiseAbs().maxCoeff();
  return top == 0.0 || d.minCoeff() <= opts.rank_tolerance * top;
}

}  // namespace

BlockMetric quadratic_metric(const QuadraticSmooth& smooth, const QuadraticMetricOptions& opts) {
  BlockMetric metric;
  const Index n = smooth.partition().num_blocks();
  metric.operators.reserve(static_cast<std::size_t>(n));
  metric.lipschitz.assign(static_cast<std::size_t>(n), 1.0);
  for (Index i = 0; i < n; ++i) {
    const auto& ai = smooth.shared_block(i);
    double shift = 0.0;
    if (opts.detect_rank_deficiency && rank_deficient(*ai, opts)) {
      const double fro2 = ai->squaredNorm();
      shift = 1e-8 * (fro2 > 0.0 ? fro2 : 1.0) / static_cast<double>(ai->cols());
    }
    metric.operators.push_back(SpdOperator::gram(ai, shift));
  }
  return metric;
}

CompositeObjective::CompositeObjective(QuadraticSmooth smooth, SeparableRegularizer reg,
                                       BlockMetric metric)
    : smooth_(std::move(smooth)), reg_(std::move(reg)), metric_(std::move(metric)) {
  metric_.validate(smooth_.partition());
  reg_.validate(smooth_.partition());
}

CompositeObjective CompositeObjective::with_quadratic_metric(QuadraticSmooth smooth,
                                                             SeparableRegularizer reg,
                                                             const QuadraticMetricOptions& opts) {
  BlockMetric metric = quadratic_metric(smooth, opts);
  return CompositeObjective(std::move(smooth), std::move(reg), std::move(metric));
}

void CompositeObjective::set_optimum(double f_star, std::optional<Vector> x_star) {
  if (x_star) partition().check_dim(*x_star);
  f_star_ = f_star;
  x_star_ = std::move(x_star);
}

double CompositeObjective::value_at(const Vector& x) const {
  partition().check_dim(x);
  const Vector r = smooth_.matrix() * x - smooth_.rhs();
  double psi = 0.0;
  for (Index i = 0; i < num_blocks(); ++i) psi += reg_.value(i, partition().block(x, i));
  return 0.5 * r.squaredNorm() + psi;
}

ResidualState::ResidualState(const CompositeObjective& objective, Vector x0)
    : obj_(&objective), x_(std::move(x0)) {
  objective.partition().check_dim(x_);
  scratch_ = Vector::Zero(objective.smooth().rows());
  psi_.resize(static_cast<std::size_t>(objective.num_blocks()));
  resync();
}

double ResidualState::regularizer_value() const {
  return std::accumulate(psi_.begin(), psi_.end(), 0.0);
}

void ResidualState::apply_update(Index i, const Vector& t) {
  const auto& part = obj_->partition();
  if (t.size() != part.size(i)) throw std::invalid_argument("apply_update: wrong block length");
  const SparseMatrix& ai = obj_->smooth().block_columns(i);
  for (Index c = 0; c < ai.outerSize(); ++c) {
    const double tc = t[c];
    if (tc == 0.0) continue;
    for (SparseMatrix::InnerIterator it(ai, c); it; ++it) scratch_[it.row()] += it.value() * tc;
  }
  double delta_sq = 0.0;
  for (Index row : obj_->smooth().block_rows(i)) {
    const double d = scratch_[row];
    if (d == 0.0) continue;
    const double old = r_[row];
    const double upd = old + d;
    delta_sq += (upd - old) * (upd + old);
    r_[row] = upd;
    scratch_[row] = 0.0;
  }
  r_sq_ = std::max(0.0, r_sq_ + delta_sq);
  auto xi = part.block(x_, i);
  xi += t;
  psi_[static_cast<std::size_t>(i)] = obj_->regularizer().value(i, xi);
}

double ResidualState::residual_drift() const {
  const Vector exact = obj_->smooth().matrix() * x_ - obj_->smooth().rhs();
  return (r_ - exact).norm();
}

void ResidualState::resync() {
  r_ = obj_->smooth().matrix() * x_ - obj_->smooth().rhs();
  r_sq_ = r_.squaredNorm();
  for (Index i = 0; i < obj_->num_blocks(); ++i) {
    psi_[static_cast<std::size_t>(i)] =
        obj_->regularizer().value(i, obj_->partition().block(x_, i));
  }
}

double eval_f(const ResidualState& state) { return state.smooth_value(); }

double eval_F(const ResidualState& state) { return state.value(); }

Vector block_gradient(const ResidualState& state, Index i) {
  return state.objective().smooth().block_columns(i).transpose() * state.residual();
}

double model_value(const ResidualState& state, Index i, const Vector& t, const Vector& gradient) {
  const auto& obj = state.objective();
  if (t.size() != obj.partition().size(i)) throw std::invalid_argument("model_value: wrong length");
  const Vector xi_new = obj.partition().block(state.x(), i) + t;
  return gradient.dot(t) + 0.5 * obj.lipschitz(i) * obj.block_operator(i).quadratic_form(t) +
         obj.regularizer().value(i, xi_new);
}

double model_value(const ResidualState& state, Index i, const Vector& t) {
  return model_value(state, i, t, block_gradient(state, i));
}

double eval_H(const ResidualState& state, const Vector& step) {
  const auto& part = state.objective().partition();
  part.check_dim(step);
  double h = eval_f(state);
  for (Index i = 0; i < part.num_blocks(); ++i) h += model_value(state, i, part.block(step, i));
  return h;
}

double eval_H_direct(const ResidualState& state, const Vector& step) {
  const auto& obj = state.objective();
  const auto& part = obj.partition();
  part.check_dim(step);
  const Vector grad = obj.smooth().matrix().transpose() * state.residual();
  double norm_sq = 0.0;
  for (Index i = 0; i < part.num_blocks(); ++i) {
    norm_sq += obj.lipschitz(i) * obj.block_operator(i).quadratic_form(part.block(step, i));
  }
  const Vector moved = state.x() + step;
  double psi = 0.0;
  for (Index i = 0; i < part.num_blocks(); ++i) psi += obj.regularizer().value(i, part.block(moved, i));
  return eval_f(state) + grad.dot(step) + 0.5 * norm_sq + psi;
}

}  // namespace icd
