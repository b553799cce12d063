#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavectrl/evolution.hpp"
#include "wavectrl/spectral.hpp"

namespace wavectrl {

// Control operator B over mode coordinates (dimension 2N+1, index n+N).
struct ControlOperator {
  Eigen::MatrixXcd mat;
  double norm = 0.0; // largest singular value
  bool real_preserving = true;
  std::string kernel; // descriptor echo for reports
};

struct KernelDescriptor {
  enum class Kind { ModeDiagonal, Quadratic, Tabulated };
  Kind kind = Kind::ModeDiagonal;
  // ModeDiagonal: nonzero gains for modes 0..N (mirrored to -n); a single
  // entry broadcasts to every mode.
  std::vector<double> gains{1.0};
  // Tabulated: kernel samples K(xi_j, xi_k) on the closed spatial grid
  // (grid_size + 1 points including 2pi); must be symmetric.
  Eigen::MatrixXd samples;
};

// B_{mn} = (1/2pi) \iint K(zeta, xi) e^{i n zeta - i m xi} dzeta dxi by closed
// trapezoid quadrature in both variables.  The quadratic builtin is
// K(xi, zeta) = 1 + xi^2 + zeta^2, which is separable of rank 2.
ControlOperator build_control_operator(const KernelDescriptor& desc,
                                       const ModeBasis& basis);

// Interval controllability Gramian over mode coordinates.
struct Gramian {
  Eigen::MatrixXcd psi;
  double a = 0.0, b = 0.0;
  int nodes = 0;
  bool real_preserving = true;
  bool degenerate = false; // zero-length interval
};

// Composite-Simpson Gramian of S(b,t)BB*S(b,t)* on [a, b] with `nodes` cells
// (even, >= 8).  Result is symmetrized.  a == b yields the flagged zero
// Gramian.
Gramian assemble_gramian(const EvolutionTable& table, const ControlOperator& B,
                         double a, double b, int nodes = 128);

// Same integrand accumulated with the blocked composite weights on table
// nodes cuts.front()..cuts.back().  Used by the mild solver so that its
// branch quadrature and its Gramian share coefficients exactly, which makes
// the terminal identity hold to roundoff.
Gramian gramian_on_grid(const EvolutionTable& table, const ControlOperator& B,
                        const std::vector<int>& cuts);

struct IterationFailure : std::runtime_error {
  IterationFailure(double res, int iters)
      : std::runtime_error("resolvent iteration did not converge"), residual(res),
        iterations(iters) {}
  double residual;
  int iterations;
};

// Solve lambda z + Psi J[z] = lambda y; returns z = lambda (lambda I + Psi J)^{-1} y.
// p = 2 is a direct Hermitian solve; p > 2 runs the damped fixed-point
// iteration z <- z - alpha (lambda z + Psi J[z] - lambda y)/lambda with
// alpha = 0.5 and throws IterationFailure when the residual fails to reach
// tol within max_iters.
SpectralField resolvent_solve(double lambda, const Gramian& psi, const SpectralField& y,
                              double p, const ModeBasis& basis, double tol = 1e-10,
                              int max_iters = 10000);

// Feedback value u(t) = B* S*(b, t) J[R(lambda, Psi) defect] for t in the
// Gramian's interval [a, b]; t outside it is a domain error.
SpectralField control_eval(double t, const SpectralField& defect,
                           const EvolutionTable& table, const ControlOperator& B,
                           const Gramian& psi, double lambda, double p);

// Regularized linear steering on [0, T]: control, state, and the terminal
// error together with its resolvent-identity prediction |z| = |lambda R l|.
struct LinearControlRun {
  std::vector<SpectralField> state;   // grid nodes 0..cells
  std::vector<SpectralField> control; // u at the same nodes
  SpectralField defect;               // l = x_T - C(T,0)v - S(T,0)w
  SpectralField z;                    // lambda R(lambda, Psi) l
  double terminal_error = 0.0;        // |x(T) - x_T|
  double predicted_error = 0.0;       // |z|
  Gramian psi;
};

LinearControlRun linear_feedback_control(const SpectralField& v, const SpectralField& w,
                                         const SpectralField& x_T,
                                         const EvolutionTable& table,
                                         const ControlOperator& B, double lambda,
                                         double p);

// Eigenvalue certificate: positive definite (threshold 1e-10 relative to the
// largest eigenvalue) or rank-deficient with a numerical null-space basis.
struct CertificateReport {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool positive_definite = false;
  Eigen::MatrixXcd null_basis; // columns; empty when positive definite
};

CertificateReport controllability_certificate(const Gramian& psi);

} // namespace wavectrl
