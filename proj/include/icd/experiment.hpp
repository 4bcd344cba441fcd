#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "icd/block_angular.hpp"
#include "icd/complexity.hpp"
#include "icd/config.hpp"
#include "icd/icd.hpp"
#include "icd/problems.hpp"

namespace icd {

enum class ProblemSource { Generate, MatrixMarket, Lasso };
enum class PreconditionerChoice { Auto, P, Phat, B };

/// Parsed and validated run configuration.
struct ExperimentConfig {
  Config raw;

  ProblemSource source = ProblemSource::Generate;
  GeneratorSpec generator;
  LassoSpec lasso;
  std::string matrix_path;
  std::string rhs_path;
  bool transpose = false;
  std::vector<Index> block_sizes;
  Index num_blocks = 0;
  std::uint64_t problem_seed = 1;
  std::optional<double> f_star;

  RegularizerKind reg_kind = RegularizerKind::Zero;
  double lambda = 0.0;

  InexactnessPolicy policy;

  std::string sampling_kind = "uniform";
  std::vector<double> probabilities;
  std::uint64_t seed = 1;
  std::string order_file;

  std::vector<InnerSolver> solvers{InnerSolver::CG};
  double drop_tol = 0.1;
  double rho_shift = 0.5;
  PreconditionerChoice preconditioner = PreconditionerChoice::Auto;
  Index max_inner_iters = 10000;
  bool warm_start = false;
  bool rigorous = false;
  bool reuse_factorizations = true;

  std::optional<double> epsilon;
  Index max_updates = 100000;

  Index repetitions = 1;
  Index threads = 1;

  std::string output_dir = ".";
  std::string prefix = "icd";

  static ExperimentConfig from_config(const Config& cfg);
  /// Keys accepted by `from_config`.
  static const std::vector<std::string>& known_keys();
};

/// Output directory after the ICD_OUTPUT_DIR override.
std::string resolve_output_dir(const ExperimentConfig& cfg);

struct Problem {
  std::shared_ptr<const CompositeObjective> objective;
  std::optional<BlockAngularMatrix> block_angular;
  Vector x0;
  std::string description;
};

Problem build_problem(const ExperimentConfig& cfg);

struct RunRow {
  std::string run_id;
  InnerSolver solver = InnerSolver::CG;
  Index repetition = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string status;
  Index updates = 0;
  Index inner_iters = 0;
  double wall_time = 0.0;
  double final_value = 0.0;
  double final_gap = 0.0;
  double factorization_seconds = 0.0;
};

struct SolverAggregate {
  InnerSolver solver = InnerSolver::CG;
  Index runs = 0;
  Index failures = 0;
  double mean_updates = 0.0;
  double mean_inner_iters = 0.0;
  double mean_wall_time = 0.0;
  double mean_final_value = 0.0;
};

struct ExperimentResult {
  std::vector<RunRow> runs;
  /// records[k] belongs to runs[k]; empty for failed runs.
  std::vector<std::vector<IterationRecord>> records;
  std::vector<SolverAggregate> aggregates;
};

/// Runs every configured solver for every repetition. Failures are recorded
/// per run; repetition r samples with seed + r.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Problem& problem);

/// Means over successful runs, one entry per solver in first-seen order.
std::vector<SolverAggregate> aggregate(const std::vector<RunRow>& runs);

/// Columns: run_id,k,block,delta_used,inner_iters,F,F_minus_Fstar,cum_inner_iters,wall_time_s.
void write_iteration_csv(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result);
void write_summary_csv(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result);

std::vector<Index> read_block_order(const std::string& path, Index num_blocks);
void write_block_order(const std::string& path, const std::vector<Index>& order);

struct BoundsRow {
  std::string theorem;
  std::string bound_case;  // "i" or "ii"
  double c = 0.0;
  BoundInputs inputs;
  double exact_bound = 0.0;
  long long exact_iterations = 0;
  BoundResult inexact;
};

/// Exact and inexact iteration counts for each (theorem, alpha, beta) in the
/// `bounds.*` keys. Infeasible rows are kept and flagged.
std::vector<BoundsRow> bounds_report(const Config& cfg);
void write_bounds_csv(std::ostream& out, const Config& cfg, const std::vector<BoundsRow>& rows);

}  // namespace icd
