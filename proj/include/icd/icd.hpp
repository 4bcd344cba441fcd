#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "icd/inner_solvers.hpp"
#include "icd/objective.hpp"

namespace icd {

enum class DeltaRule { UniformBeta, MultiplicativePlusAdditive, PerBlockList };

/// Budgets delta_k^{(i)} for the inexact block updates.
struct InexactnessPolicy {
  double alpha = 0.0;
  double beta = 0.0;
  DeltaRule rule = DeltaRule::UniformBeta;
  std::vector<double> per_block;

  static InexactnessPolicy exact() { return {}; }
  static InexactnessPolicy uniform(double beta);
  static InexactnessPolicy multiplicative(double alpha, double beta);
  static InexactnessPolicy per_block_list(std::vector<double> deltas, double alpha, double beta);

  bool is_exact() const;
  void validate(Index num_blocks) const;
};

struct DeltaBudget {
  std::vector<double> per_block;
  /// sum_i p_i delta^{(i)}.
  double mean = 0.0;
};

/// Per-block budgets at the current iterate. Checks
/// mean <= alpha (F_k - F*) + beta whenever F* is known.
DeltaBudget delta_budget(const InexactnessPolicy& policy, double f_k, std::optional<double> f_star,
                         const std::vector<double>& p);

/// Block selection law: probabilities p (with seed) or a replayed order.
class SamplingLaw {
 public:
  static SamplingLaw uniform(Index num_blocks, std::uint64_t seed);
  static SamplingLaw weighted(std::vector<double> p, std::uint64_t seed);
  /// Replays `order`; p is taken as uniform for budget averaging.
  static SamplingLaw fixed_order(std::vector<Index> order, Index num_blocks);

  Index num_blocks() const { return static_cast<Index>(p_.size()); }
  const std::vector<double>& probabilities() const { return p_; }
  std::uint64_t seed() const { return seed_; }
  bool is_fixed_order() const { return fixed_; }
  const std::vector<Index>& order() const { return order_; }

  SamplingLaw with_seed(std::uint64_t seed) const;
  void validate() const;

 private:
  std::vector<double> p_;
  std::uint64_t seed_ = 0;
  bool fixed_ = false;
  std::vector<Index> order_;
};

class BlockSampler {
 public:
  explicit BlockSampler(const SamplingLaw& law);

  /// Next block index; throws std::out_of_range once a fixed order is exhausted.
  Index next();
  Index draws() const { return draws_; }

 private:
  const SamplingLaw* law_;
  std::mt19937_64 rng_;
  std::discrete_distribution<Index> dist_;
  Index draws_ = 0;
};

/// One draw from the law (stateless convenience over BlockSampler).
Index sample_block(const SamplingLaw& law, std::mt19937_64& rng);

enum class InnerSolver { Exact, CG, PCG, ProxGradient };

const char* to_string(InnerSolver s);
InnerSolver parse_inner_solver(const std::string& name);

struct SolverOptions {
  InnerSolver solver = InnerSolver::CG;
  double drop_tol = 0.1;
  Index max_inner_iters = 10000;
  bool warm_start = false;
  /// Scale the residual test by l_i / lambda_min(B_i) so that it bounds V(t) - V(T_0).
  bool rigorous = false;
  /// Keep Cholesky factors between updates of the same block.
  bool reuse_factorizations = true;
  /// Matrix whose incomplete Cholesky preconditions block i. Defaults to B_i itself.
  std::function<SparseMatrix(Index)> preconditioner_matrix;
};

struct UpdateResult {
  Vector t;
  SolveStats stats;
  /// Gradient used for the update (A_i^T r at the pre-update iterate).
  Vector gradient;
};

/// Produces inexact block updates; holds per-block caches, so use one per run.
class UpdateEngine {
 public:
  UpdateEngine(const CompositeObjective& objective, SolverOptions options);

  /// t with V_i(x,t) <= V_i(x,0) and a certified gap <= delta. delta = 0 takes
  /// the exact path on smooth blocks.
  UpdateResult compute_update(const ResidualState& state, Index i, double delta);

  const SolverOptions& options() const { return opts_; }
  /// Seconds spent forming factorizations (Cholesky or incomplete Cholesky).
  double factorization_seconds() const { return factor_seconds_; }
  double certificate_scale(Index i);

 private:
  UpdateResult linear_update(const ResidualState& state, Index i, double delta, Vector g);
  UpdateResult prox_update(const ResidualState& state, Index i, double delta, Vector g);
  const CholeskySolver& cholesky(Index i);
  const IncompleteCholesky& preconditioner(Index i);

  const CompositeObjective* obj_;
  SolverOptions opts_;
  std::vector<std::optional<CholeskySolver>> chol_;
  std::vector<std::optional<IncompleteCholesky>> ic_;
  std::vector<std::optional<double>> lambda_min_;
  std::vector<std::optional<double>> lipschitz_est_;
  std::vector<Vector> previous_;
  double factor_seconds_ = 0.0;
};

/// Convenience wrapper building a throwaway engine.
UpdateResult compute_update(const CompositeObjective& objective, const ResidualState& state, Index i,
                            double delta, const SolverOptions& options);

struct StopCriteria {
  /// Stop once F - F* < epsilon (needs F*).
  std::optional<double> epsilon;
  Index max_updates = 100000;
  /// Without epsilon: stop when F decreases by less than 1e-12 relative over 10n updates.
  bool stagnation = true;
};

struct IterationRecord {
  Index k = 0;
  Index block = 0;
  double delta = 0.0;
  Index inner_iters = 0;
  double f_value = 0.0;
  /// NaN when F* is unknown.
  double gap = std::numeric_limits<double>::quiet_NaN();
  Index cum_inner_iters = 0;
  double wall_time = 0.0;
  double certificate = 0.0;
  bool vacuous_fallback = false;
  bool inner_converged = true;
};

enum class RunStatus { Converged, BudgetExhausted, Stagnated };

const char* to_string(RunStatus s);

struct RunResult {
  Vector x;
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::BudgetExhausted;
  double initial_value = 0.0;
  double factorization_seconds = 0.0;
  Index residual_resyncs = 0;

  bool converged() const { return status == RunStatus::Converged; }
  Index updates() const { return static_cast<Index>(records.size()); }
  Index inner_iterations() const { return records.empty() ? 0 : records.back().cum_inner_iters; }
  double final_value() const { return records.empty() ? initial_value : records.back().f_value; }
};

/// Called with the pre-update state, before the step is applied.
using UpdateObserver =
    std::function<void(const ResidualState& state, Index block, double delta, const UpdateResult& update)>;

/// Randomized inexact block coordinate descent.
RunResult icd_run(const CompositeObjective& objective, const Vector& x0,
                  const InexactnessPolicy& policy, const SamplingLaw& law,
                  const SolverOptions& options, const StopCriteria& stop,
                  const UpdateObserver& observer = {});

}  // namespace icd
