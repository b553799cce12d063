#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "wavectrl/mild_solver.hpp"
#include "wavectrl/wave.hpp"

namespace wavectrl {

// Parse or validation failure with its 1-based config line (0 when the
// problem is a missing key rather than a present one) and the offending key.
struct ConfigError : std::runtime_error {
  ConfigError(int line_no, std::string key_name, const std::string& what);
  int line;
  std::string key;
};

// One trig term of a spatial field: amp * cos(mode xi) or amp * sin(mode xi).
struct FieldTerm {
  double amp = 0.0;
  bool sine = false;
  int mode = 0;
};
using FieldSpec = std::vector<FieldTerm>;

SpectralField make_field(const FieldSpec& spec, const ModeBasis& basis);

// Separable time factor of the initial history phi(s) = profile(s) * field.
struct TimeProfile {
  enum class Kind { Constant, Exp };
  Kind kind = Kind::Constant;
  double rate = 0.0;
  double operator()(double s) const;
};

// Fully validated experiment description: the problem parameters plus what to
// run on them.  Materialize per mode count to get a runnable ProblemConfig.
struct ExperimentSpec {
  enum class Kind { LambdaSweep, ModeRefinement, Certificate, SingleRun, AxiomCheck };
  Kind kind = Kind::SingleRun;

  std::vector<double> lambdas; // sweep / certificate list
  std::vector<int> n_list;     // mode-refinement list
  std::string out_dir = ".";
  unsigned seed = 1234;
  bool deterministic_timing = false; // zero the wall_ms column for byte-stable CSVs
  double axiom_eps = 1e-4;

  int n_modes = 0;
  int grid_size = -1; // -1: basis default
  double horizon = 0.0;
  double delay = 0.0;
  double dt = 1e-3;
  double p = 2.0;
  double lambda = 1e-2;
  Coefficient advection = Coefficient::constant(0.0);
  std::string advection_token = "constant:0";

  FieldSpec phi, eta, target;
  TimeProfile phi_time;

  std::vector<double> t_list, s_list; // impulse window endpoints

  // Semilinear structure; k0 = 0, no kernels, l = 0 and no h nodes means the
  // problem is purely linear and nothing is bound.
  WaveInstance instance;

  KernelDescriptor control_kernel;
  std::string kernel_token = "mode_diagonal";
  int gramian_nodes = 128;
  double fp_tol = 1e-10;
  int fp_max_iters = 200;

  std::string echo; // canonical effective-config text, written next to outputs
};

ExperimentSpec parse_config_text(const std::string& text);
ExperimentSpec parse_config(const std::string& path);

// Canonical key = value serialization of the effective spec; reparses to an
// equivalent spec.  parse_config fills spec.echo with it.
std::string build_config_echo(const ExperimentSpec& spec);

// Build the runnable problem at the given mode count and bind the semilinear
// instance when it is active.  Throws std::invalid_argument on violations
// that only appear at this stage (field terms beyond the cutoff, off-grid
// times).
ProblemConfig materialize(const ExperimentSpec& spec, int n_modes);

} // namespace wavectrl
