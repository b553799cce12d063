#include "wavectrl/spectral.hpp"

#include <cmath>
#include <numbers>

namespace wavectrl {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

ModeBasis ModeBasis::make(int n_modes, int grid_size) {
  if (n_modes < 1) throw std::invalid_argument("n_modes must be a positive integer");
  if (grid_size < 0) grid_size = 4 * n_modes + 1;
  if (grid_size < 4 * n_modes + 1)
    throw std::invalid_argument("grid_size must be at least 4*n_modes + 1");
  return ModeBasis{n_modes, grid_size};
}

double ModeBasis::node(int k) const { return kTwoPi * k / grid_size; }
double ModeBasis::cell() const { return kTwoPi / grid_size; }

SpectralField SpectralField::zero(const ModeBasis& basis, bool real) {
  SpectralField f;
  f.c = Eigen::VectorXcd::Zero(basis.dim());
  f.real_field = real;
  return f;
}

bool SpectralField::is_hermitian(double tol) const {
  const int n = n_modes();
  double scale = 1.0;
  for (int i = 0; i < c.size(); ++i) scale = std::max(scale, std::abs(c[i]));
  for (int k = 1; k <= n; ++k)
    if (std::abs(coeff(-k) - std::conj(coeff(k))) > tol * scale) return false;
  return std::abs(coeff(0).imag()) <= tol * scale;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  if (c.size() != o.c.size()) throw std::invalid_argument("field size mismatch");
  c += o.c;
  real_field = real_field && o.real_field;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  if (c.size() != o.c.size()) throw std::invalid_argument("field size mismatch");
  c -= o.c;
  real_field = real_field && o.real_field;
  return *this;
}

SpectralField& SpectralField::operator*=(double a) {
  c *= a;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double a, SpectralField f) { return f *= a; }

SpectralField project_to_modes(const Eigen::VectorXd& grid_values, const ModeBasis& basis) {
  if (grid_values.size() != basis.grid_size)
    throw std::invalid_argument("grid_values size does not match basis grid_size");
  SpectralField f = SpectralField::zero(basis);
  const double w = basis.cell();
  // Compute n >= 0 and mirror; conjugate symmetry then holds bit-for-bit.
  for (int n = 0; n <= basis.n_modes; ++n) {
    Complex acc(0.0, 0.0);
    for (int k = 0; k < basis.grid_size; ++k) {
      const double a = n * basis.node(k);
      acc += grid_values[k] * Complex(std::cos(a), -std::sin(a));
    }
    acc *= w;
    f.coeff(n) = acc;
    if (n > 0) f.coeff(-n) = std::conj(acc);
  }
  return f;
}

Eigen::VectorXd evaluate_on_grid(const SpectralField& f, const ModeBasis& basis) {
  if (f.c.size() != basis.dim())
    throw std::invalid_argument("field dimension does not match basis");
  if (!f.real_field)
    throw std::invalid_argument("evaluate_on_grid requires a real-flagged field");
  if (!f.is_hermitian(1e-12))
    throw std::invalid_argument("real-flagged field violates Hermitian symmetry");
  Eigen::VectorXd v(basis.grid_size);
  for (int k = 0; k < basis.grid_size; ++k) {
    double acc = f.coeff(0).real();
    for (int n = 1; n <= basis.n_modes; ++n) {
      const double a = n * basis.node(k);
      const Complex cn = f.coeff(n);
      acc += 2.0 * (cn.real() * std::cos(a) - cn.imag() * std::sin(a));
    }
    v[k] = acc / kTwoPi;
  }
  return v;
}

double l2_norm(const SpectralField& f) {
  return std::sqrt(f.c.squaredNorm() / kTwoPi);
}

double lp_norm(const SpectralField& f, double p, const ModeBasis& basis) {
  if (p < 1.0) throw std::invalid_argument("p must be >= 1");
  const Eigen::VectorXd v = evaluate_on_grid(f, basis);
  double acc = 0.0;
  for (int k = 0; k < v.size(); ++k) acc += std::pow(std::abs(v[k]), p);
  return std::pow(basis.cell() * acc, 1.0 / p);
}

Complex inner(const SpectralField& x, const SpectralField& y) {
  if (x.c.size() != y.c.size()) throw std::invalid_argument("field size mismatch");
  return x.c.dot(y.c) / kTwoPi; // Eigen dot conjugates the left argument
}

double pairing(const SpectralField& x, const SpectralField& y) {
  return inner(x, y).real();
}

Eigen::VectorXd duality_map_grid(const SpectralField& x, double p, const ModeBasis& basis) {
  if (p < 2.0) throw std::invalid_argument("duality map requires p >= 2");
  Eigen::VectorXd v = evaluate_on_grid(x, basis);
  if (p == 2.0) return v;
  const double nrm = lp_norm(x, p, basis);
  if (nrm == 0.0) return Eigen::VectorXd::Zero(basis.grid_size);
  const double scale = std::pow(nrm, 2.0 - p);
  for (int k = 0; k < v.size(); ++k)
    v[k] = scale * std::pow(std::abs(v[k]), p - 2.0) * v[k];
  return v;
}

SpectralField duality_map(const SpectralField& x, double p, const ModeBasis& basis) {
  if (p < 2.0) throw std::invalid_argument("duality map requires p >= 2");
  if (p == 2.0) return x;
  if (!x.real_field)
    throw std::invalid_argument("duality map for p > 2 is defined for real fields only");
  return project_to_modes(duality_map_grid(x, p, basis), basis);
}

void symmetrize_real(SpectralField& f) {
  const int n = f.n_modes();
  for (int k = 1; k <= n; ++k) {
    const Complex avg = 0.5 * (f.c(n + k) + std::conj(f.c(n - k)));
    f.c(n + k) = avg;
    f.c(n - k) = std::conj(avg);
  }
  f.c(n) = Complex(f.c(n).real(), 0.0);
  f.real_field = true;
}

} // namespace wavectrl
