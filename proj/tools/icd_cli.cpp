// Command-line front end: generate, run, bounds, spectrum.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>

#include "icd/experiment.hpp"
#include "icd/matrix_market.hpp"

namespace {

using namespace icd;

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Config cfg = path.empty() ? Config{} : Config::load(path);
  for (const auto& a : overrides) cfg.set_assignment(a);
  return cfg;
}

std::filesystem::path output_path(const ExperimentConfig& cfg, const std::string& suffix) {
  const std::filesystem::path dir = resolve_output_dir(cfg);
  std::filesystem::create_directories(dir);
  return dir / (cfg.prefix + suffix);
}

int cmd_generate(const Config& cfg, Index order_length) {
  const ExperimentConfig e = ExperimentConfig::from_config(cfg);
  const Problem problem = build_problem(e);
  const CompositeObjective& obj = *problem.objective;
  save_matrix_market(output_path(e, "_A.mtx").string(), obj.smooth().matrix());
  save_matrix_market_vector(output_path(e, "_b.mtx").string(), obj.smooth().rhs());
  if (obj.optimal_point()) save_matrix_market_vector(output_path(e, "_xstar.mtx").string(), *obj.optimal_point());
  if (order_length > 0) {
    std::mt19937_64 rng(e.seed);
    std::uniform_int_distribution<Index> pick(0, obj.num_blocks() - 1);
    std::vector<Index> order(static_cast<std::size_t>(order_length));
    for (auto& v : order) v = pick(rng);
    write_block_order(output_path(e, "_order.txt").string(), order);
  }
  std::cout << problem.description << "\nwrote " << output_path(e, "_A.mtx").string() << '\n';
  if (obj.optimal_value()) std::cout << "F* = " << std::setprecision(17) << *obj.optimal_value() << '\n';
  return 0;
}

int cmd_run(const Config& cfg) {
  const ExperimentConfig e = ExperimentConfig::from_config(cfg);
  const Problem problem = build_problem(e);
  const ExperimentResult result = run_experiment(e, problem);
  {
    std::ofstream out(output_path(e, "_iterations.csv"));
    write_iteration_csv(out, e, result);
  }
  {
    std::ofstream out(output_path(e, "_summary.csv"));
    write_summary_csv(out, e, result);
  }
  std::cout << problem.description << '\n';
  std::cout << std::left << std::setw(8) << "solver" << std::setw(8) << "runs" << std::setw(10) << "failed"
            << std::setw(16) << "block_updates" << std::setw(16) << "inner_iters" << std::setw(14) << "time_s"
            << "final_F\n";
  for (const SolverAggregate& a : result.aggregates) {
    std::cout << std::setw(8) << to_string(a.solver) << std::setw(8) << a.runs << std::setw(10) << a.failures
              << std::setw(16) << a.mean_updates << std::setw(16) << a.mean_inner_iters << std::setw(14)
              << a.mean_wall_time << a.mean_final_value << '\n';
  }
  for (const RunRow& r : result.runs) {
    if (!r.ok) std::cout << r.run_id << " failed: " << r.error << '\n';
  }
  std::cout << "wrote " << output_path(e, "_summary.csv").string() << '\n';
  return 0;
}

int cmd_bounds(const Config& cfg) {
  const std::vector<BoundsRow> rows = bounds_report(cfg);
  write_bounds_csv(std::cout, cfg, rows);
  if (cfg.has("output.dir") || std::getenv("ICD_OUTPUT_DIR")) {
    const ExperimentConfig e = ExperimentConfig::from_config(cfg);
    std::ofstream out(output_path(e, "_bounds.csv"));
    write_bounds_csv(out, cfg, rows);
  }
  return 0;
}

nlohmann::json to_json(const SpectrumReport& r) {
  nlohmann::json j;
  j["target"] = to_string(r.target);
  j["block"] = r.block;
  j["dim"] = r.dim;
  j["rho_shift"] = r.rho_shift;
  j["tolerance"] = r.tolerance;
  j["eigenvalues"] = r.eigenvalues;
  j["counts"] = {{"zero", r.count_zero},
                 {"below_one", r.count_below_one},
                 {"unit", r.count_unit},
                 {"above_one", r.count_above_one}};
  j["ranks"] = {{"C", r.rank_c}, {"D", r.rank_d}, {"A", r.rank_a}};
  j["trace"] = {{"direct", r.trace_direct},
                {"formula", r.trace_formula},
                {"frobenius_bound", r.frobenius_bound},
                {"factorization_residual", r.factorization_residual},
                {"eigen_sum", r.eigen_sum},
                {"upper_bound", r.upper_bound}};
  j["inertia_above_one"] = r.inertia_above_one;
  if (!r.expected_eigenvalues.empty()) {
    j["expected_eigenvalues"] = r.expected_eigenvalues;
    j["expected_max_error"] = r.expected_max_error;
  }
  j["consistent"] = r.consistent;
  j["notes"] = r.notes;
  return j;
}

int cmd_spectrum(const Config& cfg, Index block, const std::string& target, double rho, Index cap) {
  const ExperimentConfig e = ExperimentConfig::from_config(cfg);
  if (e.source != ProblemSource::Generate) throw ConfigError("spectrum: needs problem.source=generate");
  const GeneratedProblem gen = generate(e.generator);
  const SpectrumReport rep = spectrum_report(gen.matrix, block, parse_spectrum_target(target), rho, cap);
  std::cout << std::setw(2) << to_json(rep) << '\n';
  return rep.consistent ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inexact block coordinate descent experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "key=value configuration file");
    sub->add_option("-s,--set", overrides, "override a configuration key (key=value), repeatable");
  };

  Index order_length = 0;
  auto* gen = app.add_subcommand("generate", "generate a problem and write it as Matrix Market files");
  add_common(gen);
  gen->add_option("--order", order_length, "also write a uniform block order of this length");

  auto* run = app.add_subcommand("run", "run the configured solvers and write CSV records");
  add_common(run);

  auto* bounds = app.add_subcommand("bounds", "tabulate exact and inexact iteration bounds");
  add_common(bounds);

  Index block = 0;
  std::string target = "PinvB";
  double rho = 0.5;
  Index cap = 500;
  auto* spec = app.add_subcommand("spectrum", "spectral report of a preconditioned block (JSON)");
  add_common(spec);
  spec->add_option("--block", block, "block index");
  spec->add_option("--target", target, "PinvB, PhatInvB or PhatInvP");
  spec->add_option("--rho", rho, "shift of the perturbed preconditioner");
  spec->add_option("--cap", cap, "largest block size for the dense eigensolve");

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = load_config(config_path, overrides);
    if (*gen) return cmd_generate(cfg, order_length);
    if (*run) return cmd_run(cfg);
    if (*bounds) return cmd_bounds(cfg);
    if (*spec) return cmd_spectrum(cfg, block, target, rho, cap);
  } catch (const icd::ParseError& ex) {
    std::cerr << "parse error: " << ex.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
