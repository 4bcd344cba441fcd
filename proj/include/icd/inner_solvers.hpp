#pragma once

#include <memory>
#include <optional>
#include <string>

#include "icd/block_space.hpp"

namespace icd {

enum class StopMode {
  /// 1/2 ||B t - g||^2 (times certificate_scale) <= beta.
  ResidualSquared,
  /// Only require V(t) <= V(0); iterate to the cap.
  VacuousGuardOnly,
  /// Primal-dual gap of the proximal subproblem <= beta.
  DualityGap,
};

const char* to_string(StopMode mode);

struct StopRule {
  StopMode mode = StopMode::ResidualSquared;
  double beta = 0.0;
  Index max_iters = 1000;
  /// Iterations performed before the stopping test is consulted (prox path).
  Index min_iters = 0;
  /// Multiplies the measured residual quantity. Setting it to l_i / lambda_min(B_i)
  /// turns 1/2 ||res||^2 into an upper bound on V(t) - V(T_0).
  double certificate_scale = 1.0;
};

struct SolveStats {
  Index iterations = 0;
  /// Certified quantity at the returned iterate (scaled residual or duality gap).
  double measure = 0.0;
  double seconds = 0.0;
  StopMode mode = StopMode::ResidualSquared;
  bool converged = false;
  bool vacuous_fallback = false;
};

struct SolveResult {
  Vector t;
  SolveStats stats;
};

/// B t = g with B SPD (apply-only).
struct LinearSubproblem {
  const SpdOperator* op = nullptr;
  Vector rhs;

  Index dim() const { return op->dim(); }
  /// q(t) = 1/2 <Bt,t> - <g,t>; proportional to V_i(x,t) - V_i(x,0) when Psi_i = 0.
  double model(const Vector& t) const;
};

/// Sparse lower triangular L with L L^T ~= P (+ shift I).
struct IncompleteCholesky {
  SparseMatrix lower;
  double shift = 0.0;
  Index restarts = 0;

  Index dim() const { return lower.rows(); }
  Vector solve(const Vector& v) const;
};

/// Left-looking incomplete Cholesky. Entries of P's own pattern are always
/// kept; fill entries below drop_tol times the column norm are discarded.
/// Non-positive pivots trigger a diagonal shift of 1e-4 trace(P)/dim (growing
/// tenfold per attempt, at most three attempts).
IncompleteCholesky incomplete_cholesky(const SparseMatrix& p, double drop_tol);

SolveResult solve_cg(const LinearSubproblem& prob, const StopRule& stop,
                     const Vector* t0 = nullptr);

SolveResult solve_pcg(const LinearSubproblem& prob, const IncompleteCholesky& precond,
                      const StopRule& stop, const Vector* t0 = nullptr);

/// Exact sparse Cholesky of an explicit SPD matrix, reusable across solves.
class CholeskySolver {
 public:
  explicit CholeskySolver(const SparseMatrix& b);
  CholeskySolver(CholeskySolver&&) noexcept;
  CholeskySolver& operator=(CholeskySolver&&) noexcept;
  ~CholeskySolver();

  Vector solve(const Vector& g) const;
  Index dim() const { return dim_; }
  Index factor_nonzeros() const { return factor_nnz_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Index dim_ = 0;
  Index factor_nnz_ = 0;
};

/// One-shot exact solve B t = g.
Vector solve_exact_cholesky(const SparseMatrix& b, const Vector& g);

double soft_threshold(double v, double tau);
Vector soft_threshold(const Vector& v, double tau);

/// Proximal operator of tau ||.||_2 (block soft thresholding).
Vector group_soft_threshold(const Vector& v, double tau);

enum class ProxKind { L1, Group };

/// min_t  1/2 ||A t + r||^2 + (shift/2) ||t||^2 + weight * h(x + t),
/// h = ||.||_1 (L1) or ||.||_2 (Group), solved by proximal gradient on y = x + t.
struct ProxSubproblem {
  const SparseMatrix* a = nullptr;
  double shift = 0.0;
  Vector r;
  Vector x;
  double weight = 0.0;
  ProxKind kind = ProxKind::L1;

  /// Primal objective at y (without the constant -1/2 ||r||^2).
  double primal(const Vector& y) const;
  /// Primal minus the value of the best dual-feasible scaling of the residual.
  double duality_gap(const Vector& y) const;
};

/// Largest eigenvalue of A^T A + shift I by power iteration.
double power_iteration_norm_sq(const SparseMatrix& a, double shift, int iterations = 30);

/// Proximal gradient with step 1/L (L = 1.05 x power estimate, doubled on a
/// failed descent test) that stops once the duality gap at the iterate is <= beta.
SolveResult solve_prox_subproblem(const ProxSubproblem& prob, const StopRule& stop,
                                  std::optional<double> lipschitz_estimate = std::nullopt);

/// ell_1 specialisation: A_i, residual r, current block x_i, lambda.
SolveResult solve_l1_subproblem(const SparseMatrix& a, const Vector& r, const Vector& x,
                                double lambda, const StopRule& stop);

/// Smallest eigenvalue of an SPD operator (dense for dim <= dense_limit,
/// otherwise a 0.9-damped inverse-iteration estimate).
double smallest_eigenvalue(const SpdOperator& op, Index dense_limit = 500);

}  // namespace icd
