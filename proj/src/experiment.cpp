#include "icd/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "icd/matrix_market.hpp"

namespace icd {

namespace {

Index to_index(long long v, const std::string& key) {
  if (v < 0) throw ConfigError("config: '" + key + "' must be >= 0");
  return static_cast<Index>(v);
}

BlockShape parse_shape(const std::string& s) {
  if (s == "tall") return BlockShape::Tall;
  if (s == "wide") return BlockShape::Wide;
  throw ConfigError("config: problem.shape must be tall or wide");
}

PreconditionerChoice parse_preconditioner(const std::string& s) {
  if (s == "auto") return PreconditionerChoice::Auto;
  if (s == "P") return PreconditionerChoice::P;
  if (s == "Phat") return PreconditionerChoice::Phat;
  if (s == "B") return PreconditionerChoice::B;
  throw ConfigError("config: inner.preconditioner must be auto, P, Phat or B");
}

}  // namespace

const std::vector<std::string>& ExperimentConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "problem.source", "problem.n", "problem.m_i", "problem.n_i", "problem.ell",
      "problem.nnz_per_column", "problem.d_fill", "problem.shape", "problem.identity_shift",
      "problem.d_scale", "problem.seed", "problem.matrix", "problem.rhs", "problem.transpose",
      "problem.block_sizes", "problem.num_blocks", "problem.fstar", "problem.rows", "problem.cols",
      "problem.support", "reg.kind", "reg.lambda", "policy.rule", "policy.alpha", "policy.beta",
      "policy.per_block", "sampling.kind", "sampling.p", "sampling.seed", "sampling.order_file",
      "inner.solvers", "inner.drop_tol", "inner.rho_shift", "inner.preconditioner", "inner.max_iters",
      "inner.warm_start", "inner.rigorous", "inner.reuse_factorizations", "stop.epsilon",
      "stop.max_updates", "run.repetitions", "run.threads", "output.dir", "output.prefix", "bounds.*"};
  return keys;
}

ExperimentConfig ExperimentConfig::from_config(const Config& cfg) {
  cfg.check_known(known_keys());
  ExperimentConfig e;
  e.raw = cfg;

  const std::string source = cfg.get_string("problem.source", "generate");
  if (source == "generate") {
    e.source = ProblemSource::Generate;
  } else if (source == "mtx") {
    e.source = ProblemSource::MatrixMarket;
  } else if (source == "lasso") {
    e.source = ProblemSource::Lasso;
  } else {
    throw ConfigError("config: problem.source must be generate, mtx or lasso");
  }
  e.problem_seed = cfg.get_uint("problem.seed", 1);

  GeneratorSpec& g = e.generator;
  g.n = to_index(cfg.get_int("problem.n", g.n), "problem.n");
  g.m_i = to_index(cfg.get_int("problem.m_i", g.m_i), "problem.m_i");
  g.n_i = to_index(cfg.get_int("problem.n_i", g.n_i), "problem.n_i");
  g.ell = to_index(cfg.get_int("problem.ell", g.ell), "problem.ell");
  g.nnz_per_column = to_index(cfg.get_int("problem.nnz_per_column", g.nnz_per_column), "problem.nnz_per_column");
  g.d_fill = cfg.get_double("problem.d_fill", g.d_fill);
  g.shape = parse_shape(cfg.get_string("problem.shape", g.m_i >= g.n_i ? "tall" : "wide"));
  g.identity_shift = cfg.get_double("problem.identity_shift", g.identity_shift);
  g.d_scale = cfg.get_double("problem.d_scale", g.d_scale);
  g.seed = e.problem_seed;

  LassoSpec& l = e.lasso;
  l.rows = to_index(cfg.get_int("problem.rows", l.rows), "problem.rows");
  l.cols = to_index(cfg.get_int("problem.cols", l.cols), "problem.cols");
  l.blocks = to_index(cfg.get_int("problem.n", l.blocks), "problem.n");
  l.nnz_per_column = to_index(cfg.get_int("problem.nnz_per_column", l.nnz_per_column), "problem.nnz_per_column");
  l.support = to_index(cfg.get_int("problem.support", l.support), "problem.support");
  l.seed = e.problem_seed;

  e.matrix_path = cfg.get_string("problem.matrix", "");
  e.rhs_path = cfg.get_string("problem.rhs", "");
  e.transpose = cfg.get_bool("problem.transpose", false);
  for (long long s : cfg.get_int_list("problem.block_sizes")) e.block_sizes.push_back(to_index(s, "problem.block_sizes"));
  e.num_blocks = to_index(cfg.get_int("problem.num_blocks", 0), "problem.num_blocks");
  e.f_star = cfg.get_optional_double("problem.fstar");
  if (e.source == ProblemSource::MatrixMarket && e.matrix_path.empty()) {
    throw ConfigError("config: problem.matrix is required for problem.source=mtx");
  }

  const std::string reg = cfg.get_string("reg.kind", e.source == ProblemSource::Lasso ? "l1" : "zero");
  if (reg == "zero") {
    e.reg_kind = RegularizerKind::Zero;
  } else if (reg == "l1") {
    e.reg_kind = RegularizerKind::L1;
  } else if (reg == "group") {
    e.reg_kind = RegularizerKind::GroupLasso;
  } else {
    throw ConfigError("config: reg.kind must be zero, l1 or group");
  }
  e.lambda = cfg.get_double("reg.lambda", e.source == ProblemSource::Lasso ? l.lambda : 0.0);
  l.lambda = e.lambda;
  if (e.source == ProblemSource::Lasso && e.reg_kind != RegularizerKind::L1) {
    throw ConfigError("config: the lasso problem needs reg.kind=l1");
  }

  const std::string rule = cfg.get_string("policy.rule", "uniform");
  const double alpha = cfg.get_double("policy.alpha", 0.0);
  const double beta = cfg.get_double("policy.beta", 0.0);
  if (rule == "uniform") {
    e.policy = InexactnessPolicy::uniform(beta);
    if (alpha != 0.0) throw ConfigError("config: policy.alpha needs policy.rule=multiplicative");
  } else if (rule == "multiplicative") {
    e.policy = InexactnessPolicy::multiplicative(alpha, beta);
  } else if (rule == "per_block") {
    e.policy = InexactnessPolicy::per_block_list(cfg.get_double_list("policy.per_block"), alpha, beta);
  } else {
    throw ConfigError("config: policy.rule must be uniform, multiplicative or per_block");
  }

  e.sampling_kind = cfg.get_string("sampling.kind", "uniform");
  if (e.sampling_kind != "uniform" && e.sampling_kind != "weighted" && e.sampling_kind != "fixed") {
    throw ConfigError("config: sampling.kind must be uniform, weighted or fixed");
  }
  e.probabilities = cfg.get_double_list("sampling.p");
  if (e.sampling_kind == "weighted" && e.probabilities.empty()) {
    throw ConfigError("config: sampling.kind=weighted needs sampling.p");
  }
  e.seed = cfg.get_uint("sampling.seed", 1);
  e.order_file = cfg.get_string("sampling.order_file", "");

  if (cfg.has("inner.solvers")) {
    e.solvers.clear();
    for (const auto& s : cfg.get_list("inner.solvers")) e.solvers.push_back(parse_inner_solver(s));
    if (e.solvers.empty()) throw ConfigError("config: inner.solvers is empty");
  } else if (e.reg_kind != RegularizerKind::Zero) {
    e.solvers = {InnerSolver::ProxGradient};
  }
  e.drop_tol = cfg.get_double("inner.drop_tol", e.drop_tol);
  e.rho_shift = cfg.get_double("inner.rho_shift", e.rho_shift);
  e.preconditioner = parse_preconditioner(cfg.get_string("inner.preconditioner", "auto"));
  e.max_inner_iters = to_index(cfg.get_int("inner.max_iters", e.max_inner_iters), "inner.max_iters");
  e.warm_start = cfg.get_bool("inner.warm_start", false);
  e.rigorous = cfg.get_bool("inner.rigorous", false);
  e.reuse_factorizations = cfg.get_bool("inner.reuse_factorizations", true);

  e.epsilon = cfg.get_optional_double("stop.epsilon");
  e.max_updates = to_index(cfg.get_int("stop.max_updates", e.max_updates), "stop.max_updates");

  e.repetitions = to_index(cfg.get_int("run.repetitions", 1), "run.repetitions");
  e.threads = std::max<Index>(1, to_index(cfg.get_int("run.threads", 1), "run.threads"));

  e.output_dir = cfg.get_string("output.dir", ".");
  e.prefix = cfg.get_string("output.prefix", "icd");
  return e;
}

std::string resolve_output_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("ICD_OUTPUT_DIR"); env && *env) return env;
  return cfg.output_dir;
}

namespace {

SeparableRegularizer make_regularizer(const ExperimentConfig& cfg, const BlockPartition& part) {
  switch (cfg.reg_kind) {
    case RegularizerKind::Zero:
      return SeparableRegularizer::zero();
    case RegularizerKind::L1:
      return SeparableRegularizer::l1(cfg.lambda);
    case RegularizerKind::GroupLasso: {
      std::vector<double> d;
      for (Index s : part.sizes()) d.push_back(static_cast<double>(s));
      return SeparableRegularizer::group_lasso(cfg.lambda, std::move(d));
    }
  }
  return SeparableRegularizer::zero();
}

BlockPartition mtx_partition(const ExperimentConfig& cfg, Index cols) {
  if (!cfg.block_sizes.empty()) {
    BlockPartition p(cfg.block_sizes);
    if (p.dim() != cols) throw ConfigError("config: problem.block_sizes do not sum to the column count");
    return p;
  }
  if (cfg.num_blocks > 0 && cols % cfg.num_blocks == 0) {
    return BlockPartition::uniform(cfg.num_blocks, cols / cfg.num_blocks);
  }
  throw ConfigError("config: give problem.block_sizes explicitly (problem.num_blocks must divide the column count)");
}

}  // namespace

Problem build_problem(const ExperimentConfig& cfg) {
  Problem out;
  std::ostringstream desc;
  switch (cfg.source) {
    case ProblemSource::Generate: {
      GeneratedProblem gen = generate(cfg.generator);
      const BlockPartition part = gen.matrix.partition();
      auto obj = std::make_shared<CompositeObjective>(CompositeObjective::with_quadratic_metric(
          QuadraticSmooth(gen.matrix.assemble(), gen.b, part), make_regularizer(cfg, part)));
      if (obj->regularizer().is_zero()) obj->set_optimum(0.0, gen.x_star);
      out.objective = obj;
      out.block_angular = std::move(gen.matrix);
      desc << "block-angular " << (cfg.generator.shape == BlockShape::Tall ? "tall" : "wide")
           << " n=" << cfg.generator.n << " M_i=" << cfg.generator.m_i << " N_i=" << cfg.generator.n_i
           << " ell=" << cfg.generator.ell << " seed=" << gen.seed_used;
      break;
    }
    case ProblemSource::MatrixMarket: {
      SparseMatrix a = load_matrix_market(cfg.matrix_path, cfg.transpose);
      const BlockPartition part = mtx_partition(cfg, a.cols());
      Vector b;
      std::optional<double> f_star = cfg.f_star;
      std::optional<Vector> x_star;
      if (!cfg.rhs_path.empty()) {
        b = load_matrix_market_vector(cfg.rhs_path);
      } else {
        std::mt19937_64 rng(cfg.problem_seed);
        std::normal_distribution<double> normal;
        Vector xs(a.cols());
        for (Index j = 0; j < xs.size(); ++j) xs[j] = normal(rng);
        b = a * xs;
        x_star = xs;
        if (cfg.reg_kind == RegularizerKind::Zero) f_star = 0.0;
      }
      auto obj = std::make_shared<CompositeObjective>(CompositeObjective::with_quadratic_metric(
          QuadraticSmooth(std::move(a), std::move(b), part), make_regularizer(cfg, part)));
      if (f_star) obj->set_optimum(*f_star, x_star);
      out.objective = obj;
      desc << "matrix market " << cfg.matrix_path << (cfg.transpose ? " (transposed)" : "");
      break;
    }
    case ProblemSource::Lasso: {
      LassoInstance inst = make_lasso(cfg.lasso);
      auto obj = std::make_shared<CompositeObjective>(CompositeObjective::with_quadratic_metric(
          QuadraticSmooth(std::move(inst.a), std::move(inst.b), inst.partition),
          SeparableRegularizer::l1(inst.lambda)));
      obj->set_optimum(inst.f_star, inst.x_star);
      out.objective = obj;
      desc << "lasso " << cfg.lasso.rows << "x" << cfg.lasso.cols << " n=" << cfg.lasso.blocks
           << " lambda=" << inst.lambda;
      break;
    }
  }
  out.x0 = Vector::Zero(out.objective->dim());
  out.description = desc.str();
  return out;
}

namespace {

std::function<SparseMatrix(Index)> preconditioner_source(const ExperimentConfig& cfg, const Problem& problem) {
  const auto& mat = problem.block_angular;
  const double rho = cfg.rho_shift;
  switch (cfg.preconditioner) {
    case PreconditionerChoice::B:
      return {};
    case PreconditionerChoice::P:
    case PreconditionerChoice::Phat:
      if (!mat) throw ConfigError("preconditioners P and Phat need a block-angular problem");
      break;
    case PreconditionerChoice::Auto:
      if (!mat) return {};
      break;
  }
  if (cfg.preconditioner == PreconditionerChoice::P) {
    for (Index i = 0; i < mat->num_blocks(); ++i) {
      const auto& ci = mat->c[static_cast<std::size_t>(i)];
      if (ci.rows() < ci.cols()) build_preconditioner(*mat, i);  // throws with advice
    }
    return [&mat](Index i) { return build_preconditioner(*mat, i); };
  }
  if (cfg.preconditioner == PreconditionerChoice::Phat) {
    return [&mat, rho](Index i) { return build_perturbed_preconditioner(*mat, i, rho); };
  }
  return [&mat, rho](Index i) {
    const auto& ci = mat->c[static_cast<std::size_t>(i)];
    return ci.rows() >= ci.cols() ? build_preconditioner(*mat, i) : build_perturbed_preconditioner(*mat, i, rho);
  };
}

SamplingLaw make_law(const ExperimentConfig& cfg, Index n, std::uint64_t seed) {
  if (cfg.sampling_kind == "weighted") return SamplingLaw::weighted(cfg.probabilities, seed);
  if (cfg.sampling_kind == "fixed") {
    if (!cfg.order_file.empty()) return SamplingLaw::fixed_order(read_block_order(cfg.order_file, n), n);
    // Drawn in advance from the uniform law, as a stored ordering.
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::vector<Index> order(static_cast<std::size_t>(cfg.max_updates));
    for (auto& v : order) v = pick(rng);
    return SamplingLaw::fixed_order(std::move(order), n);
  }
  return SamplingLaw::uniform(n, seed);
}

struct Task {
  InnerSolver solver;
  Index rep;
};

std::pair<RunRow, std::vector<IterationRecord>> run_task(const ExperimentConfig& cfg, const Problem& problem,
                                                         const Task& task) {
  RunRow row;
  row.solver = task.solver;
  row.repetition = task.rep;
  row.seed = cfg.seed + static_cast<std::uint64_t>(task.rep);
  row.run_id = std::string(to_string(task.solver)) + "-" + std::to_string(task.rep);
  std::vector<IterationRecord> records;
  try {
    const CompositeObjective& obj = *problem.objective;
    SolverOptions opts;
    opts.solver = task.solver;
    opts.drop_tol = cfg.drop_tol;
    opts.max_inner_iters = cfg.max_inner_iters;
    opts.warm_start = cfg.warm_start;
    opts.rigorous = cfg.rigorous;
    opts.reuse_factorizations = cfg.reuse_factorizations;
    opts.preconditioner_matrix = preconditioner_source(cfg, problem);
    StopCriteria stop;
    stop.epsilon = cfg.epsilon;
    stop.max_updates = cfg.max_updates;
    const SamplingLaw law = make_law(cfg, obj.num_blocks(), row.seed);
    RunResult run = icd_run(obj, problem.x0, cfg.policy, law, opts, stop);
    row.ok = true;
    row.status = to_string(run.status);
    row.updates = run.updates();
    row.inner_iters = run.inner_iterations();
    row.wall_time = run.records.empty() ? 0.0 : run.records.back().wall_time;
    row.final_value = run.final_value();
    row.final_gap = obj.optimal_value() ? row.final_value - *obj.optimal_value()
                                        : std::numeric_limits<double>::quiet_NaN();
    row.factorization_seconds = run.factorization_seconds;
    records = std::move(run.records);
  } catch (const std::exception& ex) {
    row.ok = false;
    row.status = "failed";
    row.error = ex.what();
  }
  return {std::move(row), std::move(records)};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Problem& problem) {
  std::vector<Task> tasks;
  for (InnerSolver s : cfg.solvers) {
    for (Index r = 0; r < cfg.repetitions; ++r) tasks.push_back({s, r});
  }
  ExperimentResult out;
  out.runs.resize(tasks.size());
  out.records.resize(tasks.size());
  for (std::size_t start = 0; start < tasks.size(); start += static_cast<std::size_t>(cfg.threads)) {
    const std::size_t stop = std::min(tasks.size(), start + static_cast<std::size_t>(cfg.threads));
    std::vector<std::future<std::pair<RunRow, std::vector<IterationRecord>>>> pending;
    for (std::size_t t = start; t < stop; ++t) {
      pending.push_back(std::async(cfg.threads > 1 ? std::launch::async : std::launch::deferred,
                                   [&cfg, &problem, task = tasks[t]] { return run_task(cfg, problem, task); }));
    }
    for (std::size_t t = start; t < stop; ++t) {
      auto [row, recs] = pending[t - start].get();
      out.runs[t] = std::move(row);
      out.records[t] = std::move(recs);
    }
  }
  out.aggregates = aggregate(out.runs);
  return out;
}

std::vector<SolverAggregate> aggregate(const std::vector<RunRow>& runs) {
  std::vector<SolverAggregate> out;
  for (const RunRow& r : runs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SolverAggregate& a) { return a.solver == r.solver; });
    if (it == out.end()) {
      out.push_back({});
      out.back().solver = r.solver;
      it = out.end() - 1;
    }
    if (!r.ok) {
      ++it->failures;
      continue;
    }
    ++it->runs;
    it->mean_updates += static_cast<double>(r.updates);
    it->mean_inner_iters += static_cast<double>(r.inner_iters);
    it->mean_wall_time += r.wall_time;
    it->mean_final_value += r.final_value;
  }
  for (auto& a : out) {
    if (a.runs == 0) continue;
    const double k = static_cast<double>(a.runs);
    a.mean_updates /= k;
    a.mean_inner_iters /= k;
    a.mean_wall_time /= k;
    a.mean_final_value /= k;
  }
  return out;
}

namespace {

void write_header(std::ostream& out, const ExperimentConfig& cfg) {
  out << cfg.raw.echo() << "# seed=" << cfg.seed << '\n';
}

}  // namespace

void write_iteration_csv(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result) {
  write_header(out, cfg);
  out << "run_id,k,block,delta_used,inner_iters,F,F_minus_Fstar,cum_inner_iters,wall_time_s\n";
  out << std::setprecision(17);
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    for (const IterationRecord& rec : result.records[r]) {
      out << result.runs[r].run_id << ',' << rec.k << ',' << rec.block << ',' << rec.delta << ','
          << rec.inner_iters << ',' << rec.f_value << ',';
      if (!std::isnan(rec.gap)) out << rec.gap;
      out << ',' << rec.cum_inner_iters << ',' << rec.wall_time << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result) {
  write_header(out, cfg);
  out << "run_id,solver,repetition,seed,status,block_updates,inner_iters,wall_time_s,final_F,"
         "final_F_minus_Fstar,factorization_s,error\n";
  out << std::setprecision(17);
  for (const RunRow& r : result.runs) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << r.run_id << ',' << to_string(r.solver) << ',' << r.repetition << ',' << r.seed << ',' << r.status
        << ',' << r.updates << ',' << r.inner_iters << ',' << r.wall_time << ',' << r.final_value << ',';
    if (!std::isnan(r.final_gap) && r.ok) out << r.final_gap;
    out << ',' << r.factorization_seconds << ',' << err << '\n';
  }
  for (const SolverAggregate& a : result.aggregates) {
    out << "mean-" << to_string(a.solver) << ',' << to_string(a.solver) << ",," << ",mean(" << a.runs
        << " ok; " << a.failures << " failed)," << a.mean_updates << ',' << a.mean_inner_iters << ','
        << a.mean_wall_time << ',' << a.mean_final_value << ",,,\n";
  }
}

std::vector<Index> read_block_order(const std::string& path, Index num_blocks) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open block order file '" + path + "'");
  std::vector<Index> order;
  std::string tok;
  std::size_t lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    while (ss >> tok) {
      long long v = 0;
      try {
        std::size_t pos = 0;
        v = std::stoll(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("block order: expected an integer, got '" + tok + "'", lineno);
      }
      if (v < 0 || v >= num_blocks) throw ParseError("block order: index out of range", lineno);
      order.push_back(static_cast<Index>(v));
    }
  }
  return order;
}

void write_block_order(const std::string& path, const std::vector<Index>& order) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (Index i : order) out << i << '\n';
}

std::vector<BoundsRow> bounds_report(const Config& cfg) {
  std::vector<std::string> theorems = cfg.get_list("bounds.theorem");
  if (theorems.empty()) theorems = {"4i"};
  std::vector<double> alphas = cfg.get_double_list("bounds.alpha");
  std::vector<double> betas = cfg.get_double_list("bounds.beta");
  if (alphas.empty()) alphas = {0.0};
  if (betas.empty()) betas = {0.0};
  const double eps = cfg.get_double("bounds.epsilon", 0.1);
  const double rho = cfg.get_double("bounds.rho", 0.1);
  const double xi0 = cfg.get_double("bounds.xi0", 1.0);
  const Index n = static_cast<Index>(cfg.get_int("bounds.n", 1));
  const std::optional<double> c_override = cfg.get_optional_double("bounds.c");

  std::vector<BoundsRow> rows;
  for (const std::string& th : theorems) {
    std::string bound_case;
    double c = 0.0;
    double alpha_max = std::numeric_limits<double>::infinity();
    std::string alpha_condition;
    if (th == "4i" || th == "4ii") {
      bound_case = th == "4i" ? "i" : "ii";
      if (!c_override) {
        const ConvexConstants k = constants_composite_convex(n, cfg.get_double("bounds.radius_sq", 1.0), xi0, eps);
        c = th == "4i" ? k.c1 : k.c2;
      }
    } else if (th == "5") {
      bound_case = "ii";
      const StronglyConvexConstants k =
          constants_strongly_convex(n, cfg.get_double("bounds.mu_f", 1.0), cfg.get_double("bounds.mu_psi", 0.0));
      c = k.c2;
      alpha_max = k.alpha_max;
      alpha_condition = "0 <= alpha < mu/n";
    } else if (th == "6") {
      bound_case = "i";
      if (!c_override) c = constants_smooth_convex(cfg.get_double("bounds.radius_sq", 1.0));
    } else if (th == "7") {
      bound_case = "ii";
      const double mu_f = cfg.get_double("bounds.mu_f", 0.5);
      c = constants_smooth_strongly_convex(mu_f);
      alpha_max = mu_f;
      alpha_condition = "0 <= alpha < mu_f";
    } else {
      throw ConfigError("bounds.theorem entries must be 4i, 4ii, 5, 6 or 7");
    }
    if (c_override) c = *c_override;

    for (double alpha : alphas) {
      for (double beta : betas) {
        BoundsRow row;
        row.theorem = th;
        row.bound_case = bound_case;
        row.c = c;
        row.inputs = {c, alpha, beta, eps, rho, xi0};
        if (bound_case == "i") {
          row.exact_bound = exact_iterations_case_i(c, eps, rho, xi0, true);
          row.inexact = iterations_case_i(row.inputs);
        } else {
          row.exact_bound = exact_iterations_case_ii(c, eps, rho, xi0);
          row.inexact = iterations_case_ii(row.inputs);
        }
        row.exact_iterations = static_cast<long long>(std::ceil(row.exact_bound));
        if (!(alpha < alpha_max)) {
          row.inexact.violated.push_back(alpha_condition);
          row.inexact.feasible = false;
          row.inexact.iterations = 0;
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_bounds_csv(std::ostream& out, const Config& cfg, const std::vector<BoundsRow>& rows) {
  out << cfg.echo();
  out << "theorem,case,c,alpha,beta,epsilon,rho,xi0,K_exact,K_inexact,feasible,sigma,u,shift,"
         "epsilon_lower_bound,violated\n";
  out << std::setprecision(10);
  for (const BoundsRow& r : rows) {
    std::string violated;
    for (const auto& v : r.inexact.violated) {
      if (!violated.empty()) violated += "; ";
      violated += v;
    }
    std::replace(violated.begin(), violated.end(), ',', ' ');
    out << r.theorem << ',' << r.bound_case << ',' << r.c << ',' << r.inputs.alpha << ',' << r.inputs.beta << ','
        << r.inputs.epsilon << ',' << r.inputs.rho << ',' << r.inputs.xi0 << ',' << r.exact_iterations << ',';
    if (r.inexact.feasible) out << r.inexact.iterations;
    out << ',' << (r.inexact.feasible ? "yes" : "no") << ',' << r.inexact.sigma << ',' << r.inexact.u << ','
        << r.inexact.shift << ',' << r.inexact.epsilon_lower_bound << ',' << violated << '\n';
  }
}

}  // namespace icd
