#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gflow/error.hpp"
#include "gflow/solvers.hpp"

namespace gflow::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitSolver = 3, kExitInconclusive = 4 };

/// Parsed command line. Empty paths mean "not requested".
struct ExperimentConfig {
  std::string command;

  // run / rates
  std::vector<std::string> schemes;
  std::string potential = "quad1d:1";
  std::vector<double> u0;
  double horizon = 1.0;
  int steps = 10;
  std::string mode;  // gen:p:beta | generic:gamma | metric:euclid | metric:scaled:c
  std::string out_path;
  std::string summary_path;

  int k_min = 3;
  int k_max = 10;
  std::string csv_path;
  std::string json_path;
  std::string svg_path;
  std::optional<std::pair<double, double>> planted;  // (C, order)

  // compare
  std::vector<double> tau_lambda;
  double lambda = 1.0;
  int iterations = 20;
  std::string series_csv_path;
  std::string reduction_csv_path;

  // certify
  std::vector<std::string> inputs;

  SolverSettings solver;
  std::uint64_t seed = 0;
};

/// Exit status for a library error: configuration problems map to 2,
/// numerical failures to 3.
int exit_code_for(ErrorCode code);

/// run: CSV to out_path (or `out`), JSON summary to summary_path (or `err`).
int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
/// rates: JSON slopes to `out`; CSV/JSON/SVG files on request.
int cmd_rates(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
/// compare: JSON summary to `out`; series and reduction CSVs on request.
int cmd_compare(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
/// certify: certificate JSON to `out`.
int cmd_certify(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// Dispatches on cfg.command.
int dispatch(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace gflow::cli
