#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace wavectrl {

using Complex = std::complex<double>;

// Truncated Fourier basis on the 2*pi-periodic spatial domain.
// Modes n = -N..N against synthesis functions e^{i n xi} / (2*pi); analysis
// coefficients are plain Fourier integrals c_n = \int z(xi) e^{-i n xi} dxi,
// so project/evaluate round-trip is the identity on trig polynomials of
// degree <= N.  The uniform grid carries M >= 4N+1 points so that products
// of two fields are still alias-free under the trapezoid rule.
struct ModeBasis {
  int n_modes = 0;   // N
  int grid_size = 0; // M

  static ModeBasis make(int n_modes, int grid_size = -1);

  int dim() const { return 2 * n_modes + 1; }
  // Grid node xi_k = 2 pi k / M, k = 0..M-1.
  double node(int k) const;
  // Trapezoid weight of one grid cell, 2 pi / M.
  double cell() const;

  bool operator==(const ModeBasis& o) const {
    return n_modes == o.n_modes && grid_size == o.grid_size;
  }
};

// Spatial state in mode coordinates.  coeff(n) with n in [-N, N].
// real_field marks fields that represent real-valued functions; such fields
// keep the Hermitian symmetry c_{-n} = conj(c_n).
struct SpectralField {
  Eigen::VectorXcd c;
  bool real_field = true;

  SpectralField() = default;
  static SpectralField zero(const ModeBasis& basis, bool real = true);

  int n_modes() const { return (static_cast<int>(c.size()) - 1) / 2; }
  Complex coeff(int n) const { return c[n + n_modes()]; }
  Complex& coeff(int n) { return c[n + n_modes()]; }

  bool is_hermitian(double tol) const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double a);
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double a, SpectralField f);

// Trapezoid-rule Fourier analysis of real grid samples.
SpectralField project_to_modes(const Eigen::VectorXd& grid_values, const ModeBasis& basis);

// Synthesis on the grid.  Requires a real-flagged, Hermitian-symmetric field;
// the imaginary residue cancels analytically and is not formed.
Eigen::VectorXd evaluate_on_grid(const SpectralField& f, const ModeBasis& basis);

// Discrete L2 norm, sqrt(sum |c_n|^2 / (2 pi)); equals the grid L2 norm for
// fields of degree <= N.
double l2_norm(const SpectralField& f);

// Grid L^p norm of a real field, p >= 1.
double lp_norm(const SpectralField& f, double p, const ModeBasis& basis);

// Sesquilinear mode inner product, sum conj(x_n) y_n / (2 pi).
Complex inner(const SpectralField& x, const SpectralField& y);

// Duality pairing <x, x*>; real for Hermitian-symmetric pairs.
double pairing(const SpectralField& x, const SpectralField& y);

// Duality map into the conjugate-exponent space.  p == 2 is the identity.
// For p > 2 (real fields only) the pointwise density |x|^{p-2} x / ||x||^{p-2}
// is formed on the grid and projected back onto the mode band; the projection
// leaves the pairing <x, J(x)> = ||x||_p^2 exact in the discrete inner
// product.  duality_map_grid exposes the pre-projection grid values, whose
// p'-norm equals ||x||_p.
SpectralField duality_map(const SpectralField& x, double p, const ModeBasis& basis);
Eigen::VectorXd duality_map_grid(const SpectralField& x, double p, const ModeBasis& basis);

// Averages c_{-n} against conj(c_n) and zeroes Im c_0, restoring exact
// conjugate symmetry after roundoff; marks the field real.  Only valid when
// the field is real up to rounding error.
void symmetrize_real(SpectralField& f);

} // namespace wavectrl
