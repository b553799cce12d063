#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "wavectrl/wave.hpp"

using namespace wavectrl;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

SpectralField constant_field(const ModeBasis& basis, double v) {
  SpectralField f = SpectralField::zero(basis);
  f.coeff(0) = Complex(kTwoPi * v, 0.0);
  return f;
}

SpectralField random_real_field(const ModeBasis& basis, std::mt19937& rng,
                                double amp = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpectralField f = SpectralField::zero(basis);
  f.coeff(0) = Complex(kTwoPi * amp * u(rng), 0.0);
  for (int n = 1; n <= basis.n_modes; ++n) {
    const Complex c = kTwoPi * amp * Complex(u(rng), u(rng));
    f.coeff(n) = c;
    f.coeff(-n) = std::conj(c);
  }
  return f;
}

PiecewiseTrajectory constant_trajectory(const ModeBasis& basis, double q, double T,
                                        double dt, const SpectralField& a) {
  const int zero = static_cast<int>(std::llround(q / dt));
  const int cells = static_cast<int>(std::llround(T / dt));
  std::vector<SpectralField> samples(static_cast<size_t>(zero + cells) + 1, a);
  return PiecewiseTrajectory(basis, q, T, dt, std::move(samples), a);
}

} // namespace

TEST_CASE("forcing envelope follows the oscillating gain") {
  WaveInstance w;
  CHECK(wave_gamma(0.0, w) == doctest::Approx(0.1 * std::sqrt(kTwoPi)).epsilon(1e-14));
  CHECK(std::abs(wave_gamma(0.25, w)) < 1e-16);
  CHECK(wave_gamma(0.5, w) == doctest::Approx(0.1 * std::sqrt(kTwoPi)).epsilon(1e-14));
  WaveInstance w4 = w;
  w4.p = 4.0;
  CHECK(wave_gamma(0.0, w4) ==
        doctest::Approx(0.1 * std::pow(kTwoPi, 0.25)).epsilon(1e-14));
}

TEST_CASE("forcing of a zero history is exactly zero") {
  const ModeBasis basis = ModeBasis::make(4);
  const WaveInstance w;
  const SpectralField zero = SpectralField::zero(basis);
  const auto seg = HistorySegment::functional(0.2, [zero](double) { return zero; });
  CHECK(l2_norm(wave_nonlinearity(0.1, seg, w, basis)) == 0.0);
}

TEST_CASE("forcing dies at the quarter period") {
  const ModeBasis basis = ModeBasis::make(4);
  const WaveInstance w;
  std::mt19937 rng(31);
  const SpectralField v = random_real_field(basis, rng);
  const auto seg = HistorySegment::functional(0.2, [v](double) { return v; });
  CHECK(l2_norm(wave_nonlinearity(0.25, seg, w, basis)) <= 1e-15);
}

TEST_CASE("forcing of a constant state is gain times sin of its value") {
  const ModeBasis basis = ModeBasis::make(4);
  const WaveInstance w;
  const SpectralField a = constant_field(basis, 0.9);
  const auto seg = HistorySegment::functional(0.2, [a](double) { return a; });
  const double t = 0.1;
  const SpectralField f = wave_nonlinearity(t, seg, w, basis);
  const double want = w.k0 * std::cos(kTwoPi * t) * std::sin(0.9);
  CHECK(std::abs(f.coeff(0) - Complex(kTwoPi * want)) < 1e-12);
  for (int n = 1; n <= 4; ++n) CHECK(std::abs(f.coeff(n)) < 1e-12);
}

TEST_CASE("forcing rejects history shorter than its delay") {
  const ModeBasis basis = ModeBasis::make(2);
  const WaveInstance w;
  const SpectralField zero = SpectralField::zero(basis);
  const auto seg = HistorySegment::functional(0.1, [zero](double) { return zero; });
  CHECK_THROWS_AS(wave_nonlinearity(0.1, seg, w, basis), std::domain_error);
}

TEST_CASE("forcing norm never exceeds the envelope") {
  const ModeBasis basis = ModeBasis::make(4);
  const WaveInstance w;
  std::mt19937 rng(33);
  std::uniform_real_distribution<double> tu(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double t = tu(rng);
    const SpectralField v = random_real_field(basis, rng, 2.0);
    const auto seg = HistorySegment::functional(0.2, [v](double) { return v; });
    CHECK(l2_norm(wave_nonlinearity(t, seg, w, basis)) <= wave_gamma(t, w) + 1e-10);
  }
}

TEST_CASE("decaying impulse of the zero state is a flat exponential") {
  const ModeBasis basis = ModeBasis::make(4);
  WaveInstance w;
  w.impulse_kernels = {{WaveInstance::ImpulseKernel::Family::CosineDecay, 0.8}};
  const SpectralField zero = SpectralField::zero(basis);
  for (double t : {0.3, 0.4, 0.5}) {
    const SpectralField rho = wave_impulse(0, t, zero, w, basis);
    const double want = 0.8 * std::exp(-t) * kTwoPi; // cos^2(0) has full mass
    const Eigen::VectorXd vals = evaluate_on_grid(rho, basis);
    for (int k = 0; k < vals.size(); ++k) CHECK(std::abs(vals[k] - want) < 1e-12);
    const SpectralField drho = wave_impulse_deriv(0, t, zero, w, basis);
    CHECK(l2_norm(drho + rho) <= 1e-14 * l2_norm(rho)); // d/dt = -rho
  }
}

// For x(z) = a cos z the cos^2 mass is pi (1 + J_0(2a)) by the Bessel
// integral, an oracle independent of the implementation's grid sums.
TEST_CASE("flat impulse mass matches the Bessel closed form") {
  const ModeBasis basis = ModeBasis::make(4);
  WaveInstance w;
  w.impulse_kernels = {{WaveInstance::ImpulseKernel::Family::Flat, 0.7}};
  const double a = 0.7;
  SpectralField x = SpectralField::zero(basis);
  x.coeff(1) = Complex(a * kPi, 0.0);
  x.coeff(-1) = Complex(a * kPi, 0.0);
  const SpectralField rho = wave_impulse(0, 0.4, x, w, basis);
  const double want = 0.7 * kPi * (1.0 + std::cyl_bessel_j(0.0, 2.0 * a));
  CHECK(std::abs(rho.coeff(0) - Complex(kTwoPi * want)) < 1e-10);
  for (int n = 1; n <= 4; ++n) CHECK(std::abs(rho.coeff(n)) < 1e-10);
  // Flat kernels have no time dependence to differentiate.
  CHECK(l2_norm(wave_impulse_deriv(0, 0.4, x, w, basis)) == 0.0);
}

TEST_CASE("impulse kernel index must address a configured kernel") {
  const ModeBasis basis = ModeBasis::make(2);
  WaveInstance w;
  w.impulse_kernels = {{WaveInstance::ImpulseKernel::Family::Flat, 1.0}};
  const SpectralField zero = SpectralField::zero(basis);
  CHECK_THROWS_AS(wave_impulse(1, 0.3, zero, w, basis), std::invalid_argument);
  CHECK_THROWS_AS(wave_impulse(-1, 0.3, zero, w, basis), std::invalid_argument);
}

TEST_CASE("sampled impulse bounds sit at the zero-state extremum") {
  const ModeBasis basis = ModeBasis::make(4);
  WaveInstance w;
  w.impulse_kernels = {{WaveInstance::ImpulseKernel::Family::CosineDecay, 0.8}};
  const ImpulseBounds b = estimate_impulse_bounds(0, w, basis, 0.3, 0.5);
  CHECK(b.d == doctest::Approx(kTwoPi * std::sqrt(kTwoPi) * 0.8 * std::exp(-0.3))
                   .epsilon(1e-12));
  CHECK(b.e == b.d); // the derivative only flips the sign

  WaveInstance wf;
  wf.impulse_kernels = {{WaveInstance::ImpulseKernel::Family::Flat, 0.7}};
  const ImpulseBounds bf = estimate_impulse_bounds(0, wf, basis, 0.3, 0.5);
  CHECK(bf.d == doctest::Approx(kTwoPi * std::sqrt(kTwoPi) * 0.7).epsilon(1e-12));
  CHECK(bf.e == 0.0);
}

TEST_CASE("impulse norms of random states respect the sampled bounds") {
  const ModeBasis basis = ModeBasis::make(4);
  WaveInstance w;
  w.impulse_kernels = {{WaveInstance::ImpulseKernel::Family::CosineDecay, 0.8}};
  const ImpulseBounds b = estimate_impulse_bounds(0, w, basis, 0.3, 0.5);
  std::mt19937 rng(35);
  std::uniform_real_distribution<double> tu(0.3, 0.5);
  for (int rep = 0; rep < 100; ++rep) {
    const double t = tu(rng);
    const SpectralField x = random_real_field(basis, rng, 1.5);
    CHECK(l2_norm(wave_impulse(0, t, x, w, basis)) <= b.d + 1e-10);
    CHECK(l2_norm(wave_impulse_deriv(0, t, x, w, basis)) <= b.e + 1e-10);
  }
}

TEST_CASE("position map is disabled by zero mass and kills zero states") {
  const ModeBasis basis = ModeBasis::make(2);
  const SpectralField zero = SpectralField::zero(basis);
  const PiecewiseTrajectory traj = constant_trajectory(basis, 0.2, 1.0, 1e-2, zero);
  WaveInstance w;
  CHECK(l2_norm(wave_nonlocal_g(traj, w)) == 0.0); // l = 0
  w.nonlocal_l = 0.5;
  CHECK(l2_norm(wave_nonlocal_g(traj, w)) == 0.0); // log1p(0) = 0
  w.nonlocal_tau = 1.2;
  CHECK_THROWS_AS(wave_nonlocal_g(traj, w), std::invalid_argument);
}

TEST_CASE("position map of a constant state is its normalized log mass") {
  const ModeBasis basis = ModeBasis::make(2);
  const double va = 1.7;
  const PiecewiseTrajectory traj =
      constant_trajectory(basis, 0.2, 1.0, 1e-2, constant_field(basis, va));
  WaveInstance w;
  w.nonlocal_l = 0.5;
  w.nonlocal_tau = 0.6;
  const SpectralField g = wave_nonlocal_g(traj, w);
  // rho (tau + q) log(1 + va) with rho = l / (tau + q) collapses to l log1p.
  CHECK(std::abs(g.coeff(0) - Complex(kTwoPi * 0.5 * std::log1p(va))) < 1e-10);
  for (int n = 1; n <= 2; ++n) CHECK(std::abs(g.coeff(n)) < 1e-12);
}

TEST_CASE("position map integrates one-sided values across stored jumps") {
  const ModeBasis basis = ModeBasis::make(2);
  const double va = 1.7, vb = 0.4, dt = 1e-2;
  PiecewiseTrajectory traj =
      constant_trajectory(basis, 0.2, 1.0, dt, constant_field(basis, va));
  traj.set_right_limit(traj.zero_index() + 30, constant_field(basis, vb));
  WaveInstance w;
  w.nonlocal_l = 0.5;
  w.nonlocal_tau = 0.6;
  const SpectralField g = wave_nonlocal_g(traj, w);
  const double rho = 0.5 / 0.8;
  const double mass = 0.8 * std::log1p(va) +
                      0.5 * dt * (std::log1p(vb) - std::log1p(va));
  CHECK(std::abs(g.coeff(0) - Complex(kTwoPi * rho * mass)) < 1e-10);
}

TEST_CASE("position map growth is bounded by its mass constant") {
  const ModeBasis basis = ModeBasis::make(3);
  WaveInstance w;
  w.nonlocal_l = 0.7;
  std::mt19937 rng(37);
  for (int rep = 0; rep < 20; ++rep) {
    const SpectralField h0 = random_real_field(basis, rng);
    const int zero = 20, cells = 100;
    std::vector<SpectralField> samples(static_cast<size_t>(zero + cells) + 1, h0);
    for (int j = zero + 1; j < static_cast<int>(samples.size()); ++j)
      samples[static_cast<size_t>(j)] = random_real_field(basis, rng);
    PiecewiseTrajectory traj(basis, 0.2, 1.0, 1e-2, std::move(samples), h0);
    CHECK(l2_norm(wave_nonlocal_g(traj, w)) <=
          w.nonlocal_l * (pc_norm(traj) + 1.0) + 1e-10);
  }
}

TEST_CASE("velocity map is the weighted sum of trajectory reads") {
  const ModeBasis basis = ModeBasis::make(2);
  std::mt19937 rng(38);
  const SpectralField h0 = random_real_field(basis, rng);
  const int zero = 20, cells = 100;
  std::vector<SpectralField> samples(static_cast<size_t>(zero + cells) + 1, h0);
  for (int j = zero + 1; j < static_cast<int>(samples.size()); ++j)
    samples[static_cast<size_t>(j)] = random_real_field(basis, rng);
  const PiecewiseTrajectory traj(basis, 0.2, 1.0, 1e-2, std::move(samples), h0);

  WaveInstance w;
  CHECK(l2_norm(wave_nonlocal_h(traj, w)) == 0.0); // no nodes configured

  w.h_nodes = {0.5};
  w.h_weights = {1.0};
  const SpectralField one = wave_nonlocal_h(traj, w);
  const SpectralField at = traj.value_at_time(0.5);
  for (int n = -2; n <= 2; ++n) CHECK(one.coeff(n) == at.coeff(n));

  w.h_nodes = {0.2, 0.7};
  w.h_weights = {0.3, 0.4};
  const SpectralField two = wave_nonlocal_h(traj, w);
  const SpectralField want = 0.3 * traj.value_at_time(0.2) + 0.4 * traj.value_at_time(0.7);
  CHECK(l2_norm(two - want) < 1e-14);
  CHECK(l2_norm(two) <= (0.3 + 0.4) * pc_norm(traj) + 1e-10);

  w.h_weights = {0.3};
  CHECK_THROWS_AS(wave_nonlocal_h(traj, w), std::invalid_argument);
}

TEST_CASE("binding wires forcing, impulses, nonlocal maps and bounds") {
  ProblemConfig cfg;
  cfg.basis = ModeBasis::make(4);
  cfg.horizon = 1.0;
  cfg.delay = 0.2;
  cfg.dt = 1e-3;
  const SpectralField zero = SpectralField::zero(cfg.basis);
  cfg.history = [zero](double) { return zero; };
  cfg.velocity = zero;
  cfg.target = zero;
  cfg.impulses.resize(1);
  cfg.impulses[0].t_begin = 0.3;
  cfg.impulses[0].s_end = 0.5;

  WaveInstance w;
  w.impulse_kernels = {{WaveInstance::ImpulseKernel::Family::CosineDecay, 0.8}};
  w.nonlocal_l = 0.05;
  w.nonlocal_tau = 1.0;
  w.h_nodes = {0.5};
  w.h_weights = {0.1};
  bind_wave_instance(cfg, w);

  CHECK(static_cast<bool>(cfg.forcing));
  CHECK(cfg.forcing_delays == std::vector<double>{0.2});
  CHECK(static_cast<bool>(cfg.nonlocal_state));
  CHECK(static_cast<bool>(cfg.nonlocal_velocity));
  CHECK(cfg.bound_m_g == 0.05);
  CHECK(cfg.bound_m_h == 0.1);
  CHECK_NOTHROW(cfg.validate());

  // The bound laws are the instance maps themselves.
  std::mt19937 rng(39);
  const SpectralField x = random_real_field(cfg.basis, rng);
  const SpectralField via_law = cfg.impulses[0].state_law(0.4, x);
  const SpectralField direct = wave_impulse(0, 0.4, x, w, cfg.basis);
  for (int n = -4; n <= 4; ++n) CHECK(via_law.coeff(n) == direct.coeff(n));
  const SpectralField dvia = cfg.impulses[0].velocity_law(0.4, x);
  const SpectralField ddirect = wave_impulse_deriv(0, 0.4, x, w, cfg.basis);
  for (int n = -4; n <= 4; ++n) CHECK(dvia.coeff(n) == ddirect.coeff(n));
}

TEST_CASE("binding without forcing or nonlocal terms stays minimal") {
  ProblemConfig cfg;
  cfg.basis = ModeBasis::make(2);
  cfg.horizon = 1.0;
  cfg.delay = 0.2;
  const SpectralField zero = SpectralField::zero(cfg.basis);
  cfg.history = [zero](double) { return zero; };
  cfg.velocity = zero;
  cfg.target = zero;
  WaveInstance w;
  w.k0 = 0.0;
  bind_wave_instance(cfg, w);
  CHECK_FALSE(static_cast<bool>(cfg.forcing));
  CHECK(cfg.forcing_delays.empty());
  CHECK_FALSE(static_cast<bool>(cfg.nonlocal_state));
  CHECK_FALSE(static_cast<bool>(cfg.nonlocal_velocity));
  CHECK(cfg.bound_m_g == 0.0);
  CHECK(cfg.bound_m_h == 0.0);
}

TEST_CASE("binding rejects inconsistent instances") {
  ProblemConfig cfg;
  cfg.basis = ModeBasis::make(2);
  cfg.horizon = 1.0;
  cfg.delay = 0.2;
  const SpectralField zero = SpectralField::zero(cfg.basis);
  cfg.history = [zero](double) { return zero; };
  cfg.velocity = zero;
  cfg.target = zero;

  WaveInstance bad_gain;
  bad_gain.k0 = -0.1;
  CHECK_THROWS_AS(bind_wave_instance(cfg, bad_gain), std::invalid_argument);

  WaveInstance horizon_off;
  horizon_off.horizon = 2.0;
  CHECK_THROWS_AS(bind_wave_instance(cfg, horizon_off), std::invalid_argument);

  WaveInstance p_off;
  p_off.p = 4.0;
  CHECK_THROWS_AS(bind_wave_instance(cfg, p_off), std::invalid_argument);

  WaveInstance kernels_off;
  kernels_off.impulse_kernels = {{WaveInstance::ImpulseKernel::Family::Flat, 1.0}};
  CHECK_THROWS_AS(bind_wave_instance(cfg, kernels_off), std::invalid_argument);

  WaveInstance delay_off;
  delay_off.delay_r = 0.3; // exceeds q
  CHECK_THROWS_AS(bind_wave_instance(cfg, delay_off), std::invalid_argument);

  WaveInstance tau_off;
  tau_off.nonlocal_l = 0.1;
  tau_off.nonlocal_tau = 1.5;
  CHECK_THROWS_AS(bind_wave_instance(cfg, tau_off), std::invalid_argument);

  WaveInstance tau_grid;
  tau_grid.nonlocal_l = 0.1;
  tau_grid.nonlocal_tau = 0.50041;
  CHECK_THROWS_AS(bind_wave_instance(cfg, tau_grid), std::invalid_argument);

  WaveInstance h_bad;
  h_bad.h_nodes = {0.5};
  h_bad.h_weights = {-0.1};
  CHECK_THROWS_AS(bind_wave_instance(cfg, h_bad), std::invalid_argument);

  WaveInstance h_out;
  h_out.h_nodes = {1.5};
  h_out.h_weights = {0.1};
  CHECK_THROWS_AS(bind_wave_instance(cfg, h_out), std::invalid_argument);
}
