#include "icd/inner_solvers.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <new>
#include <vector>

namespace icd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Residual replacement period for the Krylov recurrences.
constexpr Index kReplaceEvery = 50;

}  // namespace

const char* to_string(StopMode mode) {
  switch (mode) {
    case StopMode::ResidualSquared:
      return "residual";
    case StopMode::VacuousGuardOnly:
      return "vacuous";
    case StopMode::DualityGap:
      return "duality_gap";
  }
  return "?";
}

double LinearSubproblem::model(const Vector& t) const {
  return 0.5 * op->quadratic_form(t) - rhs.dot(t);
}

Vector IncompleteCholesky::solve(const Vector& v) const {
  Vector y = lower.triangularView<Eigen::Lower>().solve(v);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

namespace {

struct Entry {
  Index row;
  double value;
};

// Returns false on a non-positive pivot.
bool try_incomplete_cholesky(const SparseMatrix& p, double drop_tol, double shift,
                             std::vector<std::vector<Entry>>& cols) {
  const Index n = p.rows();
  cols.assign(static_cast<std::size_t>(n), {});
  std::vector<double> work(static_cast<std::size_t>(n), 0.0);
  std::vector<int> mark(static_cast<std::size_t>(n), 0);  // 0 none, 1 fill, 2 original
  std::vector<Index> pattern;
  std::vector<std::size_t> next(static_cast<std::size_t>(n), 0);  // cursor into cols[k]
  std::vector<std::vector<Index>> row_lists(static_cast<std::size_t>(n));

  for (Index j = 0; j < n; ++j) {
    pattern.clear();
    double col_norm_sq = 0.0;
    for (SparseMatrix::InnerIterator it(p, j); it; ++it) {
      if (it.row() < j) continue;
      const auto r = static_cast<std::size_t>(it.row());
      work[r] += it.value();
      if (!mark[r]) pattern.push_back(it.row());
      mark[r] = 2;
      col_norm_sq += it.value() * it.value();
    }
    if (!mark[static_cast<std::size_t>(j)]) {
      pattern.push_back(j);
      mark[static_cast<std::size_t>(j)] = 2;
    }
    work[static_cast<std::size_t>(j)] += shift;

    // Subtract contributions of columns k < j with L(j,k) != 0.
    auto pending = std::move(row_lists[static_cast<std::size_t>(j)]);
    row_lists[static_cast<std::size_t>(j)].clear();
    for (Index k : pending) {
      const auto& ck = cols[static_cast<std::size_t>(k)];
      std::size_t pos = next[static_cast<std::size_t>(k)];
      const double ljk = ck[pos].value;
      for (std::size_t q = pos; q < ck.size(); ++q) {
        const auto r = static_cast<std::size_t>(ck[q].row);
        if (!mark[r]) {
          mark[r] = 1;
          pattern.push_back(ck[q].row);
        }
        work[r] -= ck[q].value * ljk;
      }
      ++pos;
      next[static_cast<std::size_t>(k)] = pos;
      if (pos < ck.size()) row_lists[static_cast<std::size_t>(ck[pos].row)].push_back(k);
    }

    const double pivot = work[static_cast<std::size_t>(j)];
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      return false;
    }
    const double diag = std::sqrt(pivot);
    const double threshold = drop_tol * std::sqrt(col_norm_sq);

    std::sort(pattern.begin(), pattern.end());
    auto& cj = cols[static_cast<std::size_t>(j)];
    cj.push_back({j, diag});
    for (Index r : pattern) {
      const auto ru = static_cast<std::size_t>(r);
      if (r != j) {
        const double w = work[ru];
        const bool keep = mark[ru] == 2 ? w != 0.0 : std::abs(w) >= threshold && w != 0.0;
        if (keep) cj.push_back({r, w / diag});
      }
      work[ru] = 0.0;
      mark[ru] = 0;
    }
    next[static_cast<std::size_t>(j)] = 1;
    if (cj.size() > 1) row_lists[static_cast<std::size_t>(cj[1].row)].push_back(j);
  }
  return true;
}

}  // namespace

IncompleteCholesky incomplete_cholesky(const SparseMatrix& p, double drop_tol) {
  if (p.rows() != p.cols()) throw std::invalid_argument("incomplete_cholesky: matrix not square");
  if (drop_tol < 0.0) throw std::invalid_argument("incomplete_cholesky: negative drop tolerance");
  const Index n = p.rows();
  SparseMatrix lower_p = p.triangularView<Eigen::Lower>();
  lower_p.makeCompressed();
  const double base_shift = 1e-4 * p.diagonal().sum() / static_cast<double>(std::max<Index>(n, 1));

  std::vector<std::vector<Entry>> cols;
  double shift = 0.0;
  constexpr int kMaxShifts = 3;
  for (int attempt = 0; attempt <= kMaxShifts; ++attempt) {
    if (attempt > 0) shift = base_shift * std::pow(10.0, attempt - 1);
    if (try_incomplete_cholesky(lower_p, drop_tol, shift, cols)) {
      std::vector<Triplet> trips;
      for (Index j = 0; j < n; ++j) {
        for (const Entry& e : cols[static_cast<std::size_t>(j)]) trips.emplace_back(e.row, j, e.value);
      }
      IncompleteCholesky ic;
      ic.lower.resize(n, n);
      ic.lower.setFromTriplets(trips.begin(), trips.end());
      ic.lower.makeCompressed();
      ic.shift = shift;
      ic.restarts = attempt;
      return ic;
    }
  }
  throw StructuralError(
      "incomplete_cholesky: breakdown persists after diagonal shifts; use the perturbed "
      "preconditioner C^T C + rho I");
}

namespace {

template <class ApplyPrecond>
SolveResult krylov_solve(const LinearSubproblem& prob, const StopRule& stop, const Vector* t0,
                         ApplyPrecond&& precond) {
  const auto start = Clock::now();
  const Index n = prob.dim();
  if (prob.rhs.size() != n) throw std::invalid_argument("CG: rhs dimension mismatch");

  SolveResult out;
  out.stats.mode = stop.mode;
  Vector& t = out.t;
  t = t0 ? *t0 : Vector::Zero(n);
  if (t.size() != n) throw std::invalid_argument("CG: initial guess dimension mismatch");

  const double rhs_norm = prob.rhs.norm();
  auto certificate = [&](const Vector& res) { return 0.5 * res.squaredNorm() * stop.certificate_scale; };
  auto satisfied = [&](const Vector& res) {
    if (stop.mode == StopMode::ResidualSquared) return certificate(res) <= stop.beta;
    return res.norm() <= 1e-15 * rhs_norm;
  };

  Vector res = prob.rhs - prob.op->apply(t);
  Index k = 0;
  bool converged = satisfied(res) || res.squaredNorm() == 0.0;
  if (!converged) {
    Vector z = precond(res);
    Vector p = z;
    double rz = res.dot(z);
    Vector ap(n);
    for (k = 1; k <= stop.max_iters; ++k) {
      prob.op->apply(p, ap);
      const double pap = p.dot(ap);
      if (!(pap > 0.0)) {
        throw StructuralError("CG breakdown: non-positive curvature, operator is not SPD");
      }
      const double alpha = rz / pap;
      t.noalias() += alpha * p;
      if (k % kReplaceEvery == 0) {
        res = prob.rhs - prob.op->apply(t);
      } else {
        res.noalias() -= alpha * ap;
      }
      if (satisfied(res)) {
        // Confirm on the true residual before accepting.
        res = prob.rhs - prob.op->apply(t);
        if (satisfied(res) || res.squaredNorm() == 0.0) {
          converged = true;
          break;
        }
      }
      z = precond(res);
      const double rz_new = res.dot(z);
      if (rz_new == 0.0) {
        converged = true;
        break;
      }
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    k = std::min(k, stop.max_iters);
    res = prob.rhs - prob.op->apply(t);
  }
  if (stop.mode == StopMode::VacuousGuardOnly) converged = true;

  out.stats.iterations = k;
  out.stats.measure = certificate(res);
  out.stats.converged = converged;
  if (prob.model(t) > 0.0) {
    // Worse than the vacuous update.
    t.setZero();
    out.stats.vacuous_fallback = true;
    out.stats.measure = certificate(prob.rhs);
    out.stats.converged = stop.mode != StopMode::ResidualSquared || out.stats.measure <= stop.beta;
  }
  out.stats.seconds = seconds_since(start);
  return out;
}

}  // namespace

SolveResult solve_cg(const LinearSubproblem& prob, const StopRule& stop, const Vector* t0) {
  if (!prob.op) throw std::invalid_argument("solve_cg: missing operator");
  return krylov_solve(prob, stop, t0, [](const Vector& v) -> const Vector& { return v; });
}

SolveResult solve_pcg(const LinearSubproblem& prob, const IncompleteCholesky& precond,
                      const StopRule& stop, const Vector* t0) {
  if (!prob.op) throw std::invalid_argument("solve_pcg: missing operator");
  if (precond.dim() != prob.dim()) throw std::invalid_argument("solve_pcg: preconditioner size mismatch");
  for (Index j = 0; j < precond.dim(); ++j) {
    if (!(precond.lower.coeff(j, j) > 0.0)) throw StructuralError("solve_pcg: singular preconditioner");
  }
  return krylov_solve(prob, stop, t0, [&](const Vector& v) { return precond.solve(v); });
}

struct CholeskySolver::Impl {
  Eigen::SimplicialLLT<SparseMatrix> llt;
};

CholeskySolver::CholeskySolver(const SparseMatrix& b) : impl_(std::make_unique<Impl>()) {
  if (b.rows() != b.cols()) throw std::invalid_argument("CholeskySolver: matrix not square");
  dim_ = b.rows();
  try {
    impl_->llt.compute(b);
  } catch (const std::bad_alloc&) {
    throw ResourceError("out of memory forming the Cholesky factor");
  }
  if (impl_->llt.info() != Eigen::Success) {
    throw StructuralError("Cholesky factorization failed: matrix is not positive definite");
  }
  factor_nnz_ = impl_->llt.matrixL().nestedExpression().nonZeros();
}

CholeskySolver::CholeskySolver(CholeskySolver&&) noexcept = default;
CholeskySolver& CholeskySolver::operator=(CholeskySolver&&) noexcept = default;
CholeskySolver::~CholeskySolver() = default;

Vector CholeskySolver::solve(const Vector& g) const {
  if (g.size() != dim_) throw std::invalid_argument("CholeskySolver: rhs dimension mismatch");
  return impl_->llt.solve(g);
}

Vector solve_exact_cholesky(const SparseMatrix& b, const Vector& g) {
  return CholeskySolver(b).solve(g);
}

double soft_threshold(double v, double tau) {
  if (tau < 0.0) throw std::invalid_argument("soft_threshold: tau must be >= 0");
  const double mag = std::abs(v) - tau;
  if (mag <= 0.0) return 0.0;
  return v > 0.0 ? mag : -mag;
}

Vector soft_threshold(const Vector& v, double tau) {
  if (tau < 0.0) throw std::invalid_argument("soft_threshold: tau must be >= 0");
  return v.unaryExpr([tau](double a) { return soft_threshold(a, tau); });
}

Vector group_soft_threshold(const Vector& v, double tau) {
  if (tau < 0.0) throw std::invalid_argument("group_soft_threshold: tau must be >= 0");
  const double nrm = v.norm();
  if (nrm <= tau) return Vector::Zero(v.size());
  return (1.0 - tau / nrm) * v;
}

namespace {

double reg_norm(ProxKind kind, const Vector& y) {
  return kind == ProxKind::L1 ? y.lpNorm<1>() : y.norm();
}

double dual_reg_norm(ProxKind kind, const Vector& g) {
  return kind == ProxKind::L1 ? g.lpNorm<Eigen::Infinity>() : g.norm();
}

Vector prox(ProxKind kind, const Vector& v, double tau) {
  return kind == ProxKind::L1 ? soft_threshold(v, tau) : group_soft_threshold(v, tau);
}

// Residual z = A y - c = A (y - x) + r, and the primal value.
struct PrimalPoint {
  Vector y;
  Vector z;
  Vector grad;
  double value = 0.0;
};

PrimalPoint evaluate(const ProxSubproblem& prob, Vector y) {
  PrimalPoint pt;
  const Vector d = y - prob.x;
  pt.z = (*prob.a) * d + prob.r;
  pt.grad = prob.a->transpose() * pt.z;
  if (prob.shift != 0.0) pt.grad += prob.shift * d;
  pt.value = 0.5 * pt.z.squaredNorm() + 0.5 * prob.shift * d.squaredNorm() +
             prob.weight * reg_norm(prob.kind, y);
  pt.y = std::move(y);
  return pt;
}

// Gap between the primal at y and the dual at the scaled residual.
//   gap = 1/2 (1 - s)^2 ||z~||^2 + w h(y) + s <g, y>,  s = min(1, w / ||g||_*),
// where z~ stacks A y - c and sqrt(shift) (y - x), and g = grad = A~^T z~.
double gap_at(const ProxSubproblem& prob, const PrimalPoint& pt) {
  const double dn = dual_reg_norm(prob.kind, pt.grad);
  const double s = dn > prob.weight ? prob.weight / dn : 1.0;
  const double z_sq = pt.z.squaredNorm() + prob.shift * (pt.y - prob.x).squaredNorm();
  const double gap = 0.5 * (1.0 - s) * (1.0 - s) * z_sq + prob.weight * reg_norm(prob.kind, pt.y) +
                     s * pt.grad.dot(pt.y);
  return std::max(gap, 0.0);
}

}  // namespace

double ProxSubproblem::primal(const Vector& y) const { return evaluate(*this, y).value; }

double ProxSubproblem::duality_gap(const Vector& y) const { return gap_at(*this, evaluate(*this, y)); }

double power_iteration_norm_sq(const SparseMatrix& a, double shift, int iterations) {
  const Index n = a.cols();
  if (n == 0) return shift;
  Vector v(n);
  for (Index j = 0; j < n; ++j) v[j] = 1.0 + 0.01 * static_cast<double>(j % 7);
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = a.transpose() * (a * v);
    if (shift != 0.0) w += shift * v;
    est = v.dot(w);
    const double nrm = w.norm();
    if (nrm == 0.0) return shift;
    v = w / nrm;
  }
  return std::max(est, shift);
}

SolveResult solve_prox_subproblem(const ProxSubproblem& prob, const StopRule& stop,
                                  std::optional<double> lipschitz_estimate) {
  const auto start = Clock::now();
  if (!prob.a) throw std::invalid_argument("prox subproblem: missing matrix");
  if (!(prob.weight > 0.0)) {
    throw std::invalid_argument("prox subproblem: regularization weight must be positive; use the linear path");
  }
  const Index n = prob.a->cols();
  if (prob.x.size() != n || prob.r.size() != prob.a->rows()) {
    throw std::invalid_argument("prox subproblem: dimension mismatch");
  }

  double lip = lipschitz_estimate ? *lipschitz_estimate
                                  : 1.05 * power_iteration_norm_sq(*prob.a, prob.shift);
  if (!(lip > 0.0)) lip = 1.0;

  SolveResult out;
  out.stats.mode = StopMode::DualityGap;
  const PrimalPoint origin = evaluate(prob, prob.x);
  PrimalPoint cur = origin;
  double gap = gap_at(prob, cur);
  Index k = 0;
  bool converged = stop.min_iters <= 0 && gap <= stop.beta;
  if (gap == 0.0) converged = true;

  while (!converged && k < stop.max_iters) {
    ++k;
    PrimalPoint cand;
    for (int tries = 0; tries < 60; ++tries) {
      cand = evaluate(prob, prox(prob.kind, cur.y - cur.grad / lip, prob.weight / lip));
      const Vector step = cand.y - cur.y;
      const double smooth_cur = cur.value - prob.weight * reg_norm(prob.kind, cur.y);
      const double smooth_new = cand.value - prob.weight * reg_norm(prob.kind, cand.y);
      const double bound = smooth_cur + cur.grad.dot(step) + 0.5 * lip * step.squaredNorm();
      if (smooth_new <= bound + 1e-14 * (1.0 + std::abs(smooth_cur))) break;
      lip *= 2.0;
    }
    cur = std::move(cand);
    gap = gap_at(prob, cur);
    if (k >= stop.min_iters && gap <= stop.beta) converged = true;
  }

  out.stats.iterations = k;
  out.stats.converged = converged;
  out.stats.measure = gap;
  if (cur.value > origin.value) {
    out.t = Vector::Zero(n);
    out.stats.vacuous_fallback = true;
    out.stats.measure = gap_at(prob, origin);
    out.stats.converged = out.stats.measure <= stop.beta;
  } else {
    out.t = cur.y - prob.x;
  }
  out.stats.seconds = seconds_since(start);
  return out;
}

SolveResult solve_l1_subproblem(const SparseMatrix& a, const Vector& r, const Vector& x,
                                double lambda, const StopRule& stop) {
  ProxSubproblem prob;
  prob.a = &a;
  prob.r = r;
  prob.x = x;
  prob.weight = lambda;
  prob.kind = ProxKind::L1;
  return solve_prox_subproblem(prob, stop);
}

double smallest_eigenvalue(const SpdOperator& op, Index dense_limit) {
  const SparseMatrix b = op.assemble();
  if (op.dim() <= dense_limit) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(DenseMatrix(b), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  Eigen::SimplicialLLT<SparseMatrix> llt(b);
  if (llt.info() != Eigen::Success) throw StructuralError("smallest_eigenvalue: operator not SPD");
  Vector v = Vector::Ones(op.dim()).normalized();
  double rayleigh = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vector w = llt.solve(v);
    v = w.normalized();
    rayleigh = v.dot(b * v);
  }
  return 0.9 * rayleigh;
}

}  // namespace icd
