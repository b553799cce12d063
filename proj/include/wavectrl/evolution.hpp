#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wavectrl/spectral.hpp"

namespace wavectrl {

// Advection coefficient b(t).  Builtin shapes carry exact sup bounds; the
// tabulated shape interpolates linearly and clamps outside its node range.
class Coefficient {
 public:
  static Coefficient constant(double value);
  static Coefficient cosine(double amplitude, double omega);
  static Coefficient sine(double amplitude, double omega);
  static Coefficient tabulated(std::vector<double> times, std::vector<double> values);

  double operator()(double t) const;
  double sup_abs(double t0, double t1) const; // sup |b| on [t0, t1]

 private:
  enum class Kind { Constant, Cosine, Sine, Tabulated };
  Kind kind_ = Kind::Constant;
  double a_ = 0.0, w_ = 0.0;
  std::vector<double> times_, values_;
};

// One mode's fundamental solution data for the pair (t, s): value row and
// time-derivative row of the 2x2 state transition of h'' = -n^2 h + inb(t)h.
struct FundamentalPair {
  Complex c, s;       // c_n(t,s), s_n(t,s)
  Complex c_dt, s_dt; // their derivatives in t
};

struct ModeIvpSolution {
  int first = 0;                 // grid index of the anchor s
  std::vector<Complex> h, h_dot; // samples at nodes first..cells
};

// RK4 integration of h'' = -n^2 h + inb(t)h from anchor s to the horizon on
// the uniform grid of step dt.  The integrator subdivides each grid cell so
// its internal step never exceeds min(1e-3, 0.012/max(1,|n|)^1.25); the grid
// step itself must satisfy dt <= 0.1/max(1,|n|) or the solve is refused as
// unstable.
ModeIvpSolution solve_mode_ivp(int n, const Coefficient& b, double s, Complex h0,
                               Complex h0_dot, double horizon, double dt);

// Fundamental matrices Phi_n(t) of all modes 0..N on the time grid, anchored
// at 0.  Any pair (t, s) with s <= t is produced by Phi_n(t)Phi_n(s)^{-1}
// (the determinant is 1 by Liouville; the true determinant is divided out so
// drift cannot accumulate).  Negative modes are conjugates of positive ones
// since b is real.  Off-grid times are reached by continuing the RK4
// integration from the nearest lower node, keeping off-node values at
// integrator accuracy rather than interpolation accuracy.
class EvolutionTable {
 public:
  EvolutionTable(ModeBasis basis, Coefficient advection, double horizon, double dt,
                 int threads = 1);

  const ModeBasis& basis() const { return basis_; }
  const Coefficient& advection() const { return advection_; }
  double horizon() const { return horizon_; }
  double dt() const { return dt_; }
  int cells() const { return cells_; }
  double delta() const { return delta_; } // sup |b| on [0, T]

  // Grid index of t; throws if t is off the grid.
  int node_index(double t) const;

  FundamentalPair pair(int mode, double t, double s) const; // s <= t required
  FundamentalPair pair_indices(int mode, int jt, int js) const;

  // Phi_n(t_j) and its exact adjugate-over-determinant inverse.
  Eigen::Matrix2cd node_matrix(int mode, int j) const;
  Eigen::Matrix2cd node_inverse(int mode, int j) const;
  Eigen::Matrix2cd matrix_at(int mode, double t) const; // off-grid continuation

  // Sampled operator-norm bounds max|c_n|, max|s_n| over pairs on a strided
  // subgrid (stride exposed for reproducible dominance checks).
  double bound_m() const { return bound_m_; }
  double bound_m_tilde() const { return bound_m_tilde_; }
  int bound_stride() const { return bound_stride_; }

 private:
  Eigen::Matrix2cd continue_from(int mode_abs, const Eigen::Matrix2cd& start,
                                 double t0, double span) const;
  void compute_bounds();

  ModeBasis basis_;
  Coefficient advection_;
  double horizon_ = 0.0;
  double dt_ = 0.0;
  int cells_ = 0;
  double delta_ = 0.0;
  double bound_m_ = 0.0, bound_m_tilde_ = 0.0;
  int bound_stride_ = 1;
  std::vector<std::vector<Eigen::Matrix2cd>> phi_; // [mode][node]
};

// Mode-diagonal applications; s <= t enforced, off-grid t by continuation.
SpectralField apply_C(const EvolutionTable& table, double t, double s,
                      const SpectralField& v);
SpectralField apply_S(const EvolutionTable& table, double t, double s,
                      const SpectralField& w);
SpectralField apply_S_adjoint(const EvolutionTable& table, double t, double s,
                              const SpectralField& x);

// Numerical residuals of the evolution-operator axioms.
struct AxiomReport {
  double identity;       // max |s_n(t,t)| and |c_n(t,t) - 1| (0 by construction)
  double derivative_fwd; // max |s_n(t+eps, t)/eps - 1|
  double derivative_bwd; // max |s_n(t, t-eps)/eps - 1|
  double ode;            // max |D2_t s_n(t,s) - (-n^2 + inb(t)) s_n(t,s)|, 5-point stencil
  double lipschitz;      // max |s_n(t+dt,s) - s_n(t,s)| / dt over sampled pairs
  double bound_m;        // copied from the table
  double bound_m_tilde;
};

AxiomReport check_evolution_axioms(const EvolutionTable& table, double eps = 1e-4);

} // namespace wavectrl
