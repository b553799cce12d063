#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "wavectrl/evolution.hpp"
#include "wavectrl/gramian.hpp"
#include "wavectrl/trajectory.hpp"

namespace wavectrl {

// One non-instantaneous impulse: on (t_begin, s_end] the state is held at
// state_law(t, x(t_begin-)); velocity_law is its time derivative and enters
// only through the restart formula on (s_end, next interval].
struct ImpulseSpec {
  double t_begin = 0.0;
  double s_end = 0.0;
  std::function<SpectralField(double, const SpectralField&)> state_law;
  std::function<SpectralField(double, const SpectralField&)> velocity_law;
};

struct ProblemConfig {
  ModeBasis basis;
  double horizon = 0.0;
  double delay = 0.0;
  double dt = 1e-3;
  double lambda = 1.0;
  double p = 2.0;
  Coefficient advection = Coefficient::constant(0.0);

  std::function<SpectralField(double)> history; // phi on [-q, 0]
  SpectralField velocity;                       // eta
  SpectralField target;                         // x_T

  // Optional structure; empty std::function means absent.
  std::function<SpectralField(const PiecewiseTrajectory&)> nonlocal_state;    // g
  std::function<SpectralField(const PiecewiseTrajectory&)> nonlocal_velocity; // h
  std::function<SpectralField(double, const HistorySegment&)> forcing;        // f
  std::vector<double> forcing_delays; // offsets r the forcing reads; quadrature breaks
  std::vector<ImpulseSpec> impulses;

  KernelDescriptor kernel;

  // Growth-bound constants for the feasibility predictor; negative = unset.
  double bound_m_g = -1.0;
  double bound_m_h = -1.0;

  double fp_tol = 1e-10;
  int fp_max_iters = 200;
  int gramian_nodes = 128; // standalone Simpson Gramians (certificates)

  // Throws std::invalid_argument on any violated structural requirement:
  // positivity, impulse ordering 0 < t_1 <= s_1 <= ... <= T, and dt dividing
  // the horizon, the delay, every impulse endpoint and forcing delay.
  void validate() const;
  int cells() const;          // horizon / dt
  int node_of(double t) const;
};

// Node-index cut lists, one per control interval [s_i, t_{i+1}], marking
// every point where the branch integrand may lose smoothness (interval
// endpoints plus jump times shifted by each forcing delay).
std::vector<std::vector<int>> interval_cuts(const ProblemConfig& cfg);

// Interval Gramians on the trajectory grid with exactly those cuts, so the
// resolvent feedback cancels the control contribution of the state integral
// down to rounding in the terminal identity.
std::vector<Gramian> interval_gramians(const ProblemConfig& cfg,
                                       const EvolutionTable& table,
                                       const ControlOperator& B);

// Target defect of interval i evaluated on a trajectory:
// i = 0:  x_T - C(t_1,0)[phi(0)+g(x)] - S(t_1,0)[eta+h(x)] - int_0^{t_1} S f
// i >= 1: x_T - C(t_{i+1},s_i) rho_i - S(t_{i+1},s_i) rho_i' - int_{s_i} S f
SpectralField interval_defect(int i, const PiecewiseTrajectory& traj,
                              const ProblemConfig& cfg, const EvolutionTable& table);

// Uncontrolled, forcing-free, impulse-free extension of the initial data:
// phi on [-q, 0], then C(t,0)phi(0) + S(t,0)eta.  Fixed-point seed.
PiecewiseTrajectory free_trajectory(const ProblemConfig& cfg,
                                    const EvolutionTable& table);

struct ApplyDiagnostics {
  std::vector<SpectralField> defects;       // g_i per interval
  std::vector<SpectralField> z;             // lambda R(lambda, Psi_i) g_i
  std::vector<SpectralField> control_modes; // J[z_i] / lambda
};

// One application of the mild-solution operator: defects and nonlocal terms
// from x_in, regularized feedback per interval, then the three branches on
// the grid.  History samples are carried over from x_in untouched.
PiecewiseTrajectory apply_phi(const PiecewiseTrajectory& x_in,
                              const ProblemConfig& cfg, const EvolutionTable& table,
                              const ControlOperator& B,
                              const std::vector<Gramian>& gramians,
                              ApplyDiagnostics* diag = nullptr);

// sup over grid samples and stored right limits of the pointwise L2 distance.
double trajectory_sup_distance(const PiecewiseTrajectory& a,
                               const PiecewiseTrajectory& b);

struct SolveResult {
  PiecewiseTrajectory trajectory;
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_history; // sup difference per iteration
  std::vector<SpectralField> defects;
  std::vector<SpectralField> z;
  std::vector<SpectralField> control_modes;
  std::vector<Gramian> gramians;
  double terminal_error = 0.0;  // |x(T) - x_T|
  double predicted_error = 0.0; // |z_last| = |lambda R(lambda,Psi) g_last|
  std::shared_ptr<const EvolutionTable> table;
  ControlOperator b_op;
};

// Successive approximation x^{k+1} = Phi(x^k) from the free trajectory.
// Non-convergence is reported in the result, never thrown.
SolveResult fixed_point_solve(const ProblemConfig& cfg, int threads = 1);

// Assembled control at time t: B* S*(t_{i+1}, t) J[z_i]/lambda on the control
// interval containing t, identically zero on every impulse interval.
SpectralField control_at(const SolveResult& run, const ProblemConfig& cfg, double t);

struct FeasibilityReport {
  double value = 0.0; // K [1 + (M~ M_B)^2 T / lambda]
  bool feasible = false;
  double k = 0.0;
  double m = 0.0;
  double m_tilde = 0.0;
  double m_b = 0.0;
};

// Pure arithmetic core, exposed so the contraction predicate is testable
// against hand constants.
FeasibilityReport feasibility_value(double m, double m_tilde, double m_b,
                                    double m_g, double m_h, double horizon,
                                    double lambda);

// Advisory contraction predictor; throws std::invalid_argument when the
// nonlocal bound constants are unset.
FeasibilityReport feasibility_check(const ProblemConfig& cfg,
                                    const EvolutionTable& table,
                                    const ControlOperator& B);

struct MildResidualReport {
  double branch_initial = 0.0;  // sup residual on [0, t_1]
  double branch_impulse = 0.0;  // sup residual on the (t_i, s_i]
  double branch_post = 0.0;     // sup residual on the (s_i, t_{i+1}]
  double interface_max = 0.0;   // branch-3 value at s_i vs impulse value
  double initial_identity = 0.0; // |x(0) - phi(0) - g(x)|
  double control_support = 0.0;  // max control norm inside impulse intervals
  double sup() const;
};

// Independent re-evaluation of the mild-solution identity on a grid of step
// dt/2, with the control weights held fixed from the solve.
MildResidualReport verify_mild_solution(const SolveResult& run,
                                        const ProblemConfig& cfg, int threads = 1);

} // namespace wavectrl
