#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "cli/commands.hpp"

namespace {

const std::vector<std::string> kSchemes = {"euler", "gonzalez", "dg-root:near", "dg-root:far", "dg-root", "dg-min"};

void add_solver_flags(CLI::App* app, gflow::cli::ExperimentConfig& cfg) {
  app->add_option("--tol", cfg.solver.tol_residual, "Solver residual tolerance")->check(CLI::PositiveNumber);
  app->add_option("--max-iter", cfg.solver.max_iterations, "Solver iteration cap")->check(CLI::PositiveNumber);
  app->add_option("--seed", cfg.seed, "Seed for sampled invariant checks");
}

void add_problem_flags(CLI::App* app, gflow::cli::ExperimentConfig& cfg) {
  app->add_option("--potential", cfg.potential,
                  "quad1d:LAMBDA | aniso2d | radial:LAMBDA:DIM | logistic | obstacle");
  app->add_option("--u0", cfg.u0, "Initial state, comma separated")->delimiter(',');
  app->add_option("--T", cfg.horizon, "Time horizon");
}

}  // namespace

int main(int argc, char** argv) {
  gflow::cli::ExperimentConfig cfg;
  CLI::App app{"Time discretizations of gradient flows: runs, rate sweeps, comparisons, certificates"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Integrate one trajectory and write CSV + JSON summary");
  std::string scheme;
  run->add_option("--scheme", scheme, "euler | gonzalez | dg-root:near | dg-root:far | dg-min")
      ->check(CLI::IsMember(kSchemes));
  add_problem_flags(run, cfg);
  run->add_option("--steps", cfg.steps, "Number of uniform steps");
  run->add_option("--mode", cfg.mode, "gen:P:BETA | generic:GAMMA | metric:euclid | metric:scaled:C");
  run->add_option("--out", cfg.out_path, "Trajectory CSV (default stdout)");
  run->add_option("--summary", cfg.summary_path, "JSON summary (default stderr)");
  add_solver_flags(run, cfg);

  auto* rates = app.add_subcommand("rates", "Convergence rates over tau = T 2^-k");
  rates->add_option("--schemes", cfg.schemes, "Schemes to sweep, comma separated")
      ->delimiter(',')
      ->check(CLI::IsMember(kSchemes));
  add_problem_flags(rates, cfg);
  rates->add_option("--k-min", cfg.k_min, "Coarsest level");
  rates->add_option("--k-max", cfg.k_max, "Finest level");
  rates->add_option("--csv", cfg.csv_path, "Error table");
  rates->add_option("--json", cfg.json_path, "Slopes as JSON file");
  rates->add_option("--svg", cfg.svg_path, "Log-log plot (requires --csv)");
  std::string planted;
  rates->add_option("--planted", planted, "Extra synthetic series C:ORDER");
  add_solver_flags(rates, cfg);

  auto* compare = app.add_subcommand("compare", "Four schemes on lambda u^2/2 against closed forms");
  compare->add_option("--tau-lambda", cfg.tau_lambda, "Values of tau*lambda, comma separated")->delimiter(',');
  compare->add_option("--lambda", cfg.lambda, "Curvature lambda");
  compare->add_option("--iterations", cfg.iterations, "Steps per run");
  compare->add_option("--series-csv", cfg.series_csv_path, "Potential vs iteration");
  compare->add_option("--reduction-csv", cfg.reduction_csv_path, "Potential after the last iteration vs tau*lambda");
  compare->add_option("--svg", cfg.svg_path, "Plot of the reduction table (requires --reduction-csv)");
  add_solver_flags(compare, cfg);

  auto* cert = app.add_subcommand("certify", "Residual certificate for trajectory CSVs");
  cert->add_option("--in", cfg.inputs, "Trajectory CSV or directory of CSVs (repeatable)")->required();
  cert->add_option("--potential", cfg.potential, "Potential the trajectories were computed for");

  try {
    app.parse(argc, argv);
    if (!scheme.empty()) cfg.schemes = {scheme};
    if (!planted.empty()) {
      const auto pos = planted.find(':');
      if (pos == std::string::npos) throw CLI::ValidationError("--planted", "expected C:ORDER");
      try {
        cfg.planted = std::make_pair(std::stod(planted.substr(0, pos)), std::stod(planted.substr(pos + 1)));
      } catch (const std::exception&) {
        throw CLI::ValidationError("--planted", "expected C:ORDER");
      }
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    std::cerr << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return gflow::cli::kExitConfig;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  return gflow::cli::dispatch(cfg, std::cout, std::cerr);
}
