#pragma once

#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "wavectrl/config.hpp"

namespace wavectrl {

// One row of a sweep CSV.  NaN marks a value the failed row never reached;
// the error column carries the reason and the sweep goes on.
struct RunRecord {
  double lambda = std::numeric_limits<double>::quiet_NaN();
  int n_modes = 0;
  double terminal_error = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> defect_norms; // per control interval, reports only
  double feasibility_value = std::numeric_limits<double>::quiet_NaN();
  double gramian_min_eig = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

// Header plus one line per record, floats at 17 significant digits.
std::string run_csv(const std::vector<RunRecord>& rows);

// Solve one (N, lambda) instance; failures land in the error field.
RunRecord run_problem_row(const ExperimentSpec& spec, int n_modes, double lambda,
                          int threads);

// Each runner writes its outputs plus the effective-config echo into
// spec.out_dir and returns the process exit code (0 ok, 3 solver failure,
// 4 I/O failure); config problems throw ConfigError before any output.
int run_lambda_sweep(const ExperimentSpec& spec, int threads, std::ostream& log);
int run_mode_refinement(const ExperimentSpec& spec, int threads, std::ostream& log);
int run_certificate(const ExperimentSpec& spec, int threads, std::ostream& log);
int run_single(const ExperimentSpec& spec, int threads, std::ostream& log);
int run_axiom_check(const ExperimentSpec& spec, int threads, std::ostream& log);

int run_experiment(const ExperimentSpec& spec, int threads, std::ostream& log);

} // namespace wavectrl
