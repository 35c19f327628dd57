// Command-line front end: closed-form rank-constrained state approximation,
// independent verification battery, contour-sweep data, the variational PCA
// simulator and a seeded instance generator.
//
// Exit codes: 0 success / converged, 1 validation or verification failure,
// 2 budget or convergence failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "qlrap/qlrap.hpp"

namespace {

using namespace qlrap;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBudget = 2;

struct CommonOptions {
  std::string input_path;
  std::string spectrum;
  std::string config_path;
  std::string format = "text";
};

Config effective_config(const CommonOptions& common) {
  if (common.config_path.empty()) return Config{};
  return load_config(common.config_path);
}

DensityMatrix load_state(const CommonOptions& common, const Tolerances& tol) {
  if (!common.input_path.empty() && !common.spectrum.empty())
    throw ParseError("give either --input or --spectrum, not both");
  if (!common.input_path.empty()) return read_density_file(common.input_path, tol);
  if (!common.spectrum.empty()) return parse_spectrum_string(common.spectrum, tol);
  throw ParseError("an input state is required (--input or --spectrum)");
}

void add_state_options(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--input", common.input_path, "state file (JSON)");
  cmd->add_option("--spectrum", common.spectrum,
                  "comma-separated eigenvalues, diagonal in the computational basis");
}

void add_common_options(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--config", common.config_path, "JSON config overriding tolerances/optimizer");
  cmd->add_option("--format", common.format, "output format")
      ->check(CLI::IsMember({"text", "json"}));
}

Metric parse_metric(const std::string& name) {
  if (name == "hs") return Metric::HilbertSchmidt;
  if (name == "trace") return Metric::Trace;
  throw ParseError("metric must be hs or trace");
}

Json spectrum_json(const RVector& values) {
  Json a = Json::array();
  for (Index i = 0; i < values.size(); ++i) a.push_back(values[i]);
  return a;
}

int run_solve(const CommonOptions& common, int rank_bound, const std::string& metric_name_str,
              const std::string& output_path) {
  const Config cfg = effective_config(common);
  const DensityMatrix rho = load_state(common, cfg.tolerances);
  const Metric metric = parse_metric(metric_name_str);

  const QlrapSolution sol = metric == Metric::HilbertSchmidt
                                ? solve_hs(rho, rank_bound, cfg.tolerances)
                                : solve_trace_canonical(rho, rank_bound, cfg.tolerances);

  if (!output_path.empty())
    write_matrix_file(output_path, sol.sigma_star.matrix(), "optimal rank-constrained state");

  if (common.format == "json") {
    Json j;
    j["metric"] = metric_name(metric);
    j["rank_bound"] = rank_bound;
    j["sigma_star_spectrum"] = spectrum_json(sol.sigma_star.eigenvalues());
    j["distance"] = sol.distance_star;
    j["truncated_weight"] = sol.truncated_weight;
    j["degenerate_boundary"] = sol.degenerate_boundary;
    if (metric == Metric::Trace) {
      const TraceOptimalFamily fam = trace_family(rho, rank_bound, cfg.tolerances);
      j["family_lower_bounds"] = spectrum_json(fam.lower_bounds);
      j["family_slack"] = fam.slack;
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "metric: " << metric_name(metric) << "\n";
    std::cout << "rank bound: " << rank_bound << "\n";
    std::cout << "sigma* spectrum:";
    for (Index i = 0; i < sol.sigma_star.dim(); ++i)
      std::cout << " " << format_real(sol.sigma_star.eigenvalues()[i]);
    std::cout << "\n";
    std::cout << "distance: " << format_real(sol.distance_star) << "\n";
    std::cout << "truncated weight: " << format_real(sol.truncated_weight) << "\n";
    if (sol.degenerate_boundary)
      std::cout << "warning: eigenvalue tie at the rank boundary; "
                   "the kept component choice is arbitrary\n";
    if (metric == Metric::Trace) {
      const TraceOptimalFamily fam = trace_family(rho, rank_bound, cfg.tolerances);
      std::cout << "optimal family lower bounds:";
      for (Index i = 0; i < fam.lower_bounds.size(); ++i)
        std::cout << " " << format_real(fam.lower_bounds[i]);
      std::cout << "\n";
      std::cout << "optimal family slack: " << format_real(fam.slack) << "\n";
    }
    if (!output_path.empty()) std::cout << "state written to " << output_path << "\n";
  }
  return kExitOk;
}

int run_verify(const CommonOptions& common, const VerifyBudget& budget) {
  const Config cfg = effective_config(common);
  const VerifySummary summary = run_verify_battery(budget, cfg.tolerances);

  if (common.format == "json") {
    Json j;
    j["pass"] = summary.pass;
    j["instances"] = summary.instances;
    j["checks"] = summary.checks;
    j["grid_runs"] = summary.grid_runs;
    j["descent_runs"] = summary.descent_runs;
    j["rotation_runs"] = summary.rotation_runs;
    j["worst_rotation_margin"] = summary.worst_rotation_margin;
    j["worst_audit_margin"] = summary.worst_audit_margin;
    j["seconds"] = summary.seconds;
    Json fails = Json::array();
    for (const auto& f : summary.failures) {
      Json jf;
      jf["check"] = f.check;
      jf["dim"] = f.instance.dim;
      jf["rank_bound"] = f.instance.rank_bound;
      jf["seed"] = f.instance.seed;
      jf["spectrum"] = spectrum_json(f.instance.rho_spectrum);
      jf["value"] = f.value;
      jf["bound"] = f.bound;
      fails.push_back(std::move(jf));
    }
    j["failures"] = std::move(fails);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "instances: " << summary.instances << "\n";
    std::cout << "checks: " << summary.checks << "\n";
    std::cout << "grid runs: " << summary.grid_runs << ", descent runs: " << summary.descent_runs
              << ", rotation runs: " << summary.rotation_runs << "\n";
    std::cout << "worst rotation margin: " << format_real(summary.worst_rotation_margin) << "\n";
    std::cout << "worst majorization margin: " << format_real(summary.worst_audit_margin)
              << "\n";
    std::cout << "elapsed: " << format_real(summary.seconds, 4) << " s\n";
    for (const auto& f : summary.failures) {
      std::cout << "FAIL " << f.check << " (dim " << f.instance.dim << ", rank bound "
                << f.instance.rank_bound << ", seed " << f.instance.seed
                << "): value " << format_real(f.value) << " vs bound " << format_real(f.bound)
                << "\n";
    }
    std::cout << (summary.pass ? "verification passed" : "verification FAILED") << "\n";
  }
  return summary.pass ? kExitOk : kExitFailure;
}

int run_sweep(const CommonOptions& common, const std::string& metric_name_str, int resolution,
              double lo1, double hi1, double lo2, double hi2, const std::string& output_path) {
  const Config cfg = effective_config(common);
  const DensityMatrix rho = load_state(common, cfg.tolerances);
  SweepGrid grid;
  grid.metric = parse_metric(metric_name_str);
  grid.resolution = resolution;
  grid.lo1 = lo1;
  grid.hi1 = hi1;
  grid.lo2 = lo2;
  grid.hi2 = hi2;

  std::ofstream out(output_path);
  if (!out) throw Error("cannot write " + output_path);
  write_sweep_csv(out, rho, grid, cfg.tolerances);
  std::cout << "sweep written to " << output_path << "\n";
  return kExitOk;
}

int run_pca(const CommonOptions& common, int rank_bound, const OptimizeConfig& base,
            bool seed_given, const std::string& output_path, const std::string& history_path) {
  Config cfg = effective_config(common);
  OptimizeConfig opt = cfg.optimizer;
  // explicit CLI flags win over the config file
  opt.max_iters = base.max_iters >= 0 ? base.max_iters : opt.max_iters;
  opt.restarts = base.restarts > 0 ? base.restarts : opt.restarts;
  opt.convergence_tol = base.convergence_tol > 0 ? base.convergence_tol : opt.convergence_tol;
  opt.initial_step = base.initial_step > 0 ? base.initial_step : opt.initial_step;
  if (seed_given) opt.seed = base.seed;
  opt.noise_sigma = base.noise_sigma >= 0 ? base.noise_sigma : opt.noise_sigma;

  const DensityMatrix rho = load_state(common, cfg.tolerances);
  const VariationalRun run = optimize(rho, rank_bound, opt, cfg.tolerances);
  const PrincipalComponents pcs =
      extract_principal_components(run.final_state, rank_bound, cfg.tolerances);

  Json j;
  j["converged"] = run.converged;
  j["final_cost"] = run.final_cost;
  j["target"] = run.target;
  j["gap"] = run.closed_form_gap;
  j["iterations"] = run.iterations;
  j["best_restart"] = run.best_restart;
  j["final_spectrum"] = spectrum_json(run.final_state.eigenvalues());
  j["principal_values"] = spectrum_json(pcs.values);
  j["degenerate_ordering"] = pcs.degenerate_ordering;

  if (!output_path.empty()) {
    std::ofstream out(output_path);
    if (!out) throw Error("cannot write " + output_path);
    out << j.dump(2) << "\n";
  }
  if (!history_path.empty()) {
    std::ofstream out(history_path);
    if (!out) throw Error("cannot write " + history_path);
    out << "iteration,cost\n";
    for (size_t i = 0; i < run.cost_history.size(); ++i)
      out << i << "," << format_real(run.cost_history[i]) << "\n";
  }

  if (common.format == "json") {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "converged: " << (run.converged ? "yes" : "no") << "\n";
    std::cout << "final cost: " << format_real(run.final_cost) << "\n";
    std::cout << "closed-form target: " << format_real(run.target) << "\n";
    std::cout << "gap: " << format_real(run.closed_form_gap) << "\n";
    std::cout << "iterations: " << run.iterations << " (restart " << run.best_restart << ")\n";
    std::cout << "final spectrum:";
    for (Index i = 0; i < run.final_state.dim(); ++i)
      std::cout << " " << format_real(run.final_state.eigenvalues()[i]);
    std::cout << "\n";
  }
  return run.converged ? kExitOk : kExitBudget;
}

int run_random(int dim, int rank, std::uint64_t seed, const std::string& output_path,
               const std::string& label) {
  Rng rng(seed);
  const DensityMatrix rho = random_density(dim, rank, rng);
  write_matrix_file(output_path, rho.matrix(),
                    label.empty() ? std::optional<std::string>{} : std::optional<std::string>{label},
                    seed);
  std::cout << "state written to " << output_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closed-form low-rank approximation of density matrices"};
  app.require_subcommand(1);

  CommonOptions solve_common, verify_common, sweep_common, pca_common;

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "closed-form optimal rank-constrained state");
  int solve_rank = 1;
  std::string solve_metric = "hs";
  std::string solve_output;
  add_state_options(solve_cmd, solve_common);
  add_common_options(solve_cmd, solve_common);
  solve_cmd->add_option("--rank", solve_rank, "rank bound R")->required();
  solve_cmd->add_option("--metric", solve_metric, "distance metric")
      ->check(CLI::IsMember({"hs", "trace"}));
  solve_cmd->add_option("--output", solve_output, "write sigma* as a state file");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run the oracle verification battery");
  VerifyBudget budget;
  long long verify_max_dim = 8, verify_audit_dim = 6;
  add_common_options(verify_cmd, verify_common);
  verify_cmd->add_option("--max-dim", verify_max_dim, "largest instance dimension");
  verify_cmd->add_option("--spectra", budget.spectra_per_dim, "instances per dimension");
  verify_cmd->add_option("--resolution", budget.resolution, "grid oracle resolution");
  verify_cmd->add_option("--restarts", budget.descent_restarts, "descent restarts");
  verify_cmd->add_option("--rotation-trials", budget.rotation_trials, "rotations per instance");
  verify_cmd->add_option("--audit-trials", budget.audit_trials, "majorization audit trials");
  verify_cmd->add_option("--audit-dim", verify_audit_dim, "majorization audit dimension");
  verify_cmd->add_option("--seed", budget.seed, "battery base seed");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "contour CSV over the two leading weights");
  std::string sweep_metric = "hs", sweep_output;
  int sweep_resolution = 201;
  double sweep_lo1 = 0.0, sweep_hi1 = 1.0, sweep_lo2 = 0.0, sweep_hi2 = 1.0;
  add_state_options(sweep_cmd, sweep_common);
  add_common_options(sweep_cmd, sweep_common);
  sweep_cmd->add_option("--metric", sweep_metric, "distance metric")
      ->check(CLI::IsMember({"hs", "trace"}));
  sweep_cmd->add_option("--resolution", sweep_resolution, "grid points per axis");
  sweep_cmd->add_option("--min1", sweep_lo1, "first-axis lower bound");
  sweep_cmd->add_option("--max1", sweep_hi1, "first-axis upper bound");
  sweep_cmd->add_option("--min2", sweep_lo2, "second-axis lower bound");
  sweep_cmd->add_option("--max2", sweep_hi2, "second-axis upper bound");
  sweep_cmd->add_option("--output", sweep_output, "CSV path")->required();

  // pca
  auto* pca_cmd = app.add_subcommand("pca", "variational principal-component simulation");
  int pca_rank = 1;
  OptimizeConfig pca_opt;
  pca_opt.max_iters = -1;       // sentinel: keep config value unless given
  pca_opt.restarts = -1;
  pca_opt.convergence_tol = -1;
  pca_opt.initial_step = -1;
  pca_opt.noise_sigma = -1;
  std::string pca_output, pca_history;
  add_state_options(pca_cmd, pca_common);
  add_common_options(pca_cmd, pca_common);
  pca_cmd->add_option("--rank", pca_rank, "rank bound R (ancilla dimension)")->required();
  pca_cmd->add_option("--max-iters", pca_opt.max_iters, "iteration cap per restart");
  pca_cmd->add_option("--restarts", pca_opt.restarts, "random restarts");
  pca_cmd->add_option("--tol", pca_opt.convergence_tol, "convergence tolerance on the cost gap");
  pca_cmd->add_option("--step", pca_opt.initial_step, "initial line-search step");
  auto* pca_seed_opt = pca_cmd->add_option("--seed", pca_opt.seed, "restart seed base");
  pca_cmd->add_option("--noise-sigma", pca_opt.noise_sigma,
                      "additive Gaussian noise per cost term (robustness experiments)");
  pca_cmd->add_option("--output", pca_output, "write the run record (JSON)");
  pca_cmd->add_option("--history", pca_history, "write the cost history (CSV)");

  // random
  auto* random_cmd = app.add_subcommand("random", "seeded random density matrix generator");
  int random_dim = 2, random_rank = 1;
  std::uint64_t random_seed = 0;
  std::string random_output, random_label;
  random_cmd->add_option("--dim", random_dim, "dimension")->required();
  random_cmd->add_option("--rank", random_rank, "exact rank")->required();
  random_cmd->add_option("--seed", random_seed, "generator seed")->required();
  random_cmd->add_option("--output", random_output, "state file path")->required();
  random_cmd->add_option("--label", random_label, "optional label stored in the file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) return run_solve(solve_common, solve_rank, solve_metric, solve_output);
    if (*verify_cmd) {
      budget.max_dim = static_cast<qlrap::Index>(verify_max_dim);
      budget.audit_dim = static_cast<qlrap::Index>(verify_audit_dim);
      return run_verify(verify_common, budget);
    }
    if (*sweep_cmd)
      return run_sweep(sweep_common, sweep_metric, sweep_resolution, sweep_lo1, sweep_hi1,
                       sweep_lo2, sweep_hi2, sweep_output);
    if (*pca_cmd)
      return run_pca(pca_common, pca_rank, pca_opt, pca_seed_opt->count() > 0, pca_output,
                     pca_history);
    if (*random_cmd)
      return run_random(random_dim, random_rank, random_seed, random_output, random_label);
  } catch (const qlrap::BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const qlrap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
