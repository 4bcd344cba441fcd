#include "icd/icd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace icd {

namespace {

using Clock = std::chrono::steady_clock;

// Floor on the duality-gap target when the budget is exactly zero on the
// proximal path, where no finite method is exact.
constexpr double kProxGapFloor = 1e-14;

}  // namespace

InexactnessPolicy InexactnessPolicy::uniform(double beta) {
  InexactnessPolicy p;
  p.beta = beta;
  return p;
}

InexactnessPolicy InexactnessPolicy::multiplicative(double alpha, double beta) {
  InexactnessPolicy p;
  p.alpha = alpha;
  p.beta = beta;
  p.rule = DeltaRule::MultiplicativePlusAdditive;
  return p;
}

InexactnessPolicy InexactnessPolicy::per_block_list(std::vector<double> deltas, double alpha,
                                                    double beta) {
  InexactnessPolicy p;
  p.alpha = alpha;
  p.beta = beta;
  p.rule = DeltaRule::PerBlockList;
  p.per_block = std::move(deltas);
  return p;
}

bool InexactnessPolicy::is_exact() const {
  if (rule == DeltaRule::PerBlockList) {
    return std::all_of(per_block.begin(), per_block.end(), [](double d) { return d == 0.0; });
  }
  return alpha == 0.0 && beta == 0.0;
}

void InexactnessPolicy::validate(Index num_blocks) const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("inexactness: alpha and beta must be >= 0");
  if (rule == DeltaRule::UniformBeta && alpha != 0.0) {
    throw ConfigError("inexactness: the uniform rule ignores alpha; use the multiplicative rule");
  }
  if (rule == DeltaRule::PerBlockList) {
    if (static_cast<Index>(per_block.size()) != num_blocks) {
      throw ConfigError("inexactness: per-block list length differs from the number of blocks");
    }
    for (double d : per_block) {
      if (!(d >= 0.0)) throw ConfigError("inexactness: per-block budgets must be >= 0");
    }
  }
}

DeltaBudget delta_budget(const InexactnessPolicy& policy, double f_k, std::optional<double> f_star,
                         const std::vector<double>& p) {
  const Index n = static_cast<Index>(p.size());
  policy.validate(n);
  const bool needs_fstar =
      policy.rule == DeltaRule::MultiplicativePlusAdditive || policy.alpha > 0.0;
  if (needs_fstar && !f_star) {
    throw ConfigError("inexactness: a multiplicative error term requires the optimal value F*");
  }
  const double excess = f_star ? std::max(f_k - *f_star, 0.0) : 0.0;
  const double bound = policy.alpha * excess + policy.beta;

  DeltaBudget out;
  switch (policy.rule) {
    case DeltaRule::UniformBeta:
      out.per_block.assign(p.size(), policy.beta);
      break;
    case DeltaRule::MultiplicativePlusAdditive:
      out.per_block.assign(p.size(), bound);
      break;
    case DeltaRule::PerBlockList:
      out.per_block = policy.per_block;
      break;
  }
  for (std::size_t i = 0; i < p.size(); ++i) out.mean += p[i] * out.per_block[i];
  if (f_star && out.mean > bound * (1.0 + 1e-12) + 1e-300) {
    throw ConfigError("inexactness: expected budget " + std::to_string(out.mean) +
                      " exceeds alpha (F - F*) + beta = " + std::to_string(bound));
  }
  return out;
}

SamplingLaw SamplingLaw::uniform(Index num_blocks, std::uint64_t seed) {
  if (num_blocks <= 0) throw std::invalid_argument("sampling: need at least one block");
  return weighted(std::vector<double>(static_cast<std::size_t>(num_blocks),
                                      1.0 / static_cast<double>(num_blocks)),
                  seed);
}

SamplingLaw SamplingLaw::weighted(std::vector<double> p, std::uint64_t seed) {
  SamplingLaw law;
  law.p_ = std::move(p);
  law.seed_ = seed;
  law.validate();
  return law;
}

SamplingLaw SamplingLaw::fixed_order(std::vector<Index> order, Index num_blocks) {
  SamplingLaw law = uniform(num_blocks, 0);
  law.fixed_ = true;
  law.order_ = std::move(order);
  law.validate();
  return law;
}

SamplingLaw SamplingLaw::with_seed(std::uint64_t seed) const {
  SamplingLaw law = *this;
  law.seed_ = seed;
  return law;
}

void SamplingLaw::validate() const {
  if (p_.empty()) throw std::invalid_argument("sampling: empty probability vector");
  double sum = 0.0;
  for (double v : p_) {
    if (!(v > 0.0)) throw std::invalid_argument("sampling: probabilities must be positive");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("sampling: probabilities must sum to 1");
  for (Index i : order_) {
    if (i < 0 || i >= num_blocks()) throw std::out_of_range("sampling: block order entry out of range");
  }
}

BlockSampler::BlockSampler(const SamplingLaw& law)
    : law_(&law), rng_(law.seed()), dist_(law.probabilities().begin(), law.probabilities().end()) {
  law.validate();
}

Index BlockSampler::next() {
  if (law_->is_fixed_order()) {
    if (draws_ >= static_cast<Index>(law_->order().size())) {
      throw std::out_of_range("sampling: fixed block order exhausted");
    }
    return law_->order()[static_cast<std::size_t>(draws_++)];
  }
  ++draws_;
  return dist_(rng_);
}

Index sample_block(const SamplingLaw& law, std::mt19937_64& rng) {
  law.validate();
  std::discrete_distribution<Index> dist(law.probabilities().begin(), law.probabilities().end());
  return dist(rng);
}

const char* to_string(InnerSolver s) {
  switch (s) {
    case InnerSolver::Exact:
      return "exact";
    case InnerSolver::CG:
      return "cg";
    case InnerSolver::PCG:
      return "pcg";
    case InnerSolver::ProxGradient:
      return "prox";
  }
  return "?";
}

InnerSolver parse_inner_solver(const std::string& name) {
  if (name == "exact") return InnerSolver::Exact;
  if (name == "cg") return InnerSolver::CG;
  if (name == "pcg") return InnerSolver::PCG;
  if (name == "prox") return InnerSolver::ProxGradient;
  throw ConfigError("unknown inner solver '" + name + "' (expected exact, cg, pcg or prox)");
}

UpdateEngine::UpdateEngine(const CompositeObjective& objective, SolverOptions options)
    : obj_(&objective), opts_(std::move(options)) {
  const auto n = static_cast<std::size_t>(objective.num_blocks());
  chol_.resize(n);
  ic_.resize(n);
  lambda_min_.resize(n);
  lipschitz_est_.resize(n);
  previous_.resize(n);
  if (opts_.max_inner_iters <= 0) throw ConfigError("inner solver: max iterations must be positive");
  if (opts_.solver == InnerSolver::ProxGradient && objective.regularizer().is_zero()) {
    throw ConfigError("inner solver: the proximal solver needs a nonzero regularizer");
  }
  if (opts_.solver != InnerSolver::ProxGradient && !objective.regularizer().is_zero()) {
    throw ConfigError("inner solver: nonsmooth blocks need the proximal solver");
  }
}

double UpdateEngine::certificate_scale(Index i) {
  if (!opts_.rigorous) return 1.0;
  auto& lm = lambda_min_[static_cast<std::size_t>(i)];
  if (!lm) lm = smallest_eigenvalue(obj_->block_operator(i));
  if (!(*lm > 0.0)) throw StructuralError("block operator is not positive definite");
  return obj_->lipschitz(i) / *lm;
}

const CholeskySolver& UpdateEngine::cholesky(Index i) {
  auto& slot = chol_[static_cast<std::size_t>(i)];
  if (!slot || !opts_.reuse_factorizations) {
    const auto start = Clock::now();
    slot.emplace(obj_->block_operator(i).assemble());
    factor_seconds_ += std::chrono::duration<double>(Clock::now() - start).count();
  }
  return *slot;
}

const IncompleteCholesky& UpdateEngine::preconditioner(Index i) {
  auto& slot = ic_[static_cast<std::size_t>(i)];
  if (!slot) {
    const auto start = Clock::now();
    const SparseMatrix p = opts_.preconditioner_matrix ? opts_.preconditioner_matrix(i)
                                                       : obj_->block_operator(i).assemble();
    if (p.rows() != obj_->partition().size(i) || p.cols() != p.rows()) {
      throw std::invalid_argument("preconditioner size differs from the block size");
    }
    slot = incomplete_cholesky(p, opts_.drop_tol);
    factor_seconds_ += std::chrono::duration<double>(Clock::now() - start).count();
  }
  return *slot;
}

UpdateResult UpdateEngine::compute_update(const ResidualState& state, Index i, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("compute_update: delta must be >= 0");
  Vector g = block_gradient(state, i);
  const Index ni = obj_->partition().size(i);
  const bool smooth = obj_->regularizer().is_zero();
  const bool stationary =
      g.isZero(0.0) && (smooth || obj_->partition().block(state.x(), i).isZero(0.0));
  if (stationary) {
    UpdateResult out;
    out.t = Vector::Zero(ni);
    out.stats.converged = true;
    out.stats.mode = smooth ? StopMode::ResidualSquared : StopMode::DualityGap;
    out.gradient = std::move(g);
    return out;
  }
  return smooth ? linear_update(state, i, delta, std::move(g)) : prox_update(state, i, delta, std::move(g));
}

UpdateResult UpdateEngine::linear_update(const ResidualState&, Index i, double delta, Vector g) {
  const auto start = Clock::now();
  const SpdOperator& op = obj_->block_operator(i);
  LinearSubproblem prob{&op, -g / obj_->lipschitz(i)};
  StopRule stop;
  stop.mode = StopMode::ResidualSquared;
  stop.beta = delta;
  stop.max_iters = opts_.max_inner_iters;
  stop.certificate_scale = certificate_scale(i);

  UpdateResult out;
  if (delta == 0.0 || opts_.solver == InnerSolver::Exact) {
    out.t = cholesky(i).solve(prob.rhs);
    const Vector res = prob.rhs - op.apply(out.t);
    out.stats.mode = StopMode::ResidualSquared;
    out.stats.measure = 0.5 * res.squaredNorm() * stop.certificate_scale;
    out.stats.converged = true;
    if (prob.model(out.t) > 0.0) {
      out.t.setZero();
      out.stats.vacuous_fallback = true;
    }
  } else {
    Vector& prev = previous_[static_cast<std::size_t>(i)];
    const Vector* t0 = opts_.warm_start && prev.size() == op.dim() ? &prev : nullptr;
    if (opts_.solver == InnerSolver::PCG) {
      const IncompleteCholesky& ic = preconditioner(i);
      SolveResult r = solve_pcg(prob, ic, stop, t0);
      out.t = std::move(r.t);
      out.stats = r.stats;
    } else {
      SolveResult r = solve_cg(prob, stop, t0);
      out.t = std::move(r.t);
      out.stats = r.stats;
    }
    if (opts_.warm_start) prev = out.t;
  }
  out.stats.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  out.gradient = std::move(g);
  return out;
}

UpdateResult UpdateEngine::prox_update(const ResidualState& state, Index i, double delta, Vector g) {
  const SpdOperator& op = obj_->block_operator(i);
  if (!op.is_gram() || obj_->lipschitz(i) != 1.0) {
    throw ConfigError("proximal solver needs the quadratic metric (l_i = 1, B_i = A_i^T A_i)");
  }
  ProxSubproblem prob;
  prob.a = &op.columns();
  prob.shift = op.shift();
  prob.r = state.residual();
  prob.x = obj_->partition().block(state.x(), i);
  prob.weight = obj_->regularizer().block_weight(i);
  prob.kind = obj_->regularizer().kind() == RegularizerKind::L1 ? ProxKind::L1 : ProxKind::Group;

  StopRule stop;
  stop.mode = StopMode::DualityGap;
  stop.beta = std::max(delta, kProxGapFloor);
  stop.max_iters = opts_.max_inner_iters;
  stop.min_iters = 1;

  auto& lip = lipschitz_est_[static_cast<std::size_t>(i)];
  if (!lip) lip = 1.05 * power_iteration_norm_sq(*prob.a, prob.shift);
  SolveResult r = solve_prox_subproblem(prob, stop, lip);
  UpdateResult out;
  out.t = std::move(r.t);
  out.stats = r.stats;
  out.gradient = std::move(g);
  return out;
}

UpdateResult compute_update(const CompositeObjective& objective, const ResidualState& state, Index i,
                            double delta, const SolverOptions& options) {
  UpdateEngine engine(objective, options);
  return engine.compute_update(state, i, delta);
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged:
      return "converged";
    case RunStatus::BudgetExhausted:
      return "not converged";
    case RunStatus::Stagnated:
      return "stagnated";
  }
  return "?";
}

RunResult icd_run(const CompositeObjective& objective, const Vector& x0,
                  const InexactnessPolicy& policy, const SamplingLaw& law,
                  const SolverOptions& options, const StopCriteria& stop,
                  const UpdateObserver& observer) {
  const auto start = Clock::now();
  const Index n = objective.num_blocks();
  if (law.num_blocks() != n) throw ConfigError("sampling law and objective disagree on the block count");
  policy.validate(n);
  const std::optional<double> f_star = objective.optimal_value();
  if (stop.epsilon && !f_star) throw ConfigError("stopping on F - F* requires the optimal value F*");
  if (stop.max_updates < 0) throw ConfigError("max_updates must be >= 0");

  ResidualState state(objective, x0);
  UpdateEngine engine(objective, options);
  BlockSampler sampler(law);

  RunResult out;
  out.initial_value = state.value();
  double f_value = out.initial_value;
  const Index window = 10 * n;
  double window_start = f_value;
  const double drift_tol = 1e-10 * (1.0 + objective.smooth().rhs().norm());
  Index cum_inner = 0;

  out.status = RunStatus::BudgetExhausted;
  for (Index k = 0;; ++k) {
    if (stop.epsilon && f_value - *f_star < *stop.epsilon) {
      out.status = RunStatus::Converged;
      break;
    }
    if (k >= stop.max_updates) break;
    Index i;
    try {
      i = sampler.next();
    } catch (const std::out_of_range&) {
      break;
    }
    const DeltaBudget budget = delta_budget(policy, f_value, f_star, law.probabilities());
    const double delta = budget.per_block[static_cast<std::size_t>(i)];
    UpdateResult upd = engine.compute_update(state, i, delta);
    if (observer) observer(state, i, delta, upd);
    if (!upd.t.isZero(0.0)) state.apply_update(i, upd.t);

    if ((k + 1) % window == 0 && state.residual_drift() > drift_tol) {
      state.resync();
      ++out.residual_resyncs;
    }
    f_value = state.value();
    cum_inner += upd.stats.iterations;

    IterationRecord rec;
    rec.k = k + 1;
    rec.block = i;
    rec.delta = delta;
    rec.inner_iters = upd.stats.iterations;
    rec.f_value = f_value;
    if (f_star) rec.gap = f_value - *f_star;
    rec.cum_inner_iters = cum_inner;
    rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    rec.certificate = upd.stats.measure;
    rec.vacuous_fallback = upd.stats.vacuous_fallback;
    rec.inner_converged = upd.stats.converged;
    out.records.push_back(rec);

    if (!stop.epsilon && stop.stagnation && (k + 1) % window == 0) {
      if (window_start - f_value <= 1e-12 * std::max(1.0, std::abs(window_start))) {
        out.status = RunStatus::Stagnated;
        break;
      }
      window_start = f_value;
    }
  }
  out.x = state.x();
  out.factorization_seconds = engine.factorization_seconds();
  return out;
}

}  // namespace icd
