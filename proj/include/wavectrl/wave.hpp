#pragma once

#include "wavectrl/mild_solver.hpp"

namespace wavectrl {

// Concrete periodic wave-equation ingredients: a delayed sine forcing with an
// oscillating gain, integral impulse laws built from smooth kernels, and the
// two nonlocal initial-data maps.
struct WaveInstance {
  double k0 = 0.1;     // forcing gain
  double delay_r = 0.2; // point delay the forcing reads (<= q)
  double horizon = 1.0; // period of the forcing gain cos(2 pi t / T)
  double p = 2.0;

  // Impulse kernel g_i(t, xi, z); the law integrates it against
  // cos^2(x(t_i-)(z)) over z.
  struct ImpulseKernel {
    enum class Family {
      CosineDecay, // a (1 + cos(xi - z)) e^{-t}
      Flat,        // a
    };
    Family family = Family::CosineDecay;
    double gain = 1.0;
  };
  std::vector<ImpulseKernel> impulse_kernels;

  // Position map g: integral of a constant weight of L1 mass l against
  // log(1 + |y(s, xi)|) over s in [-q, tau].  l = 0 disables the map.
  double nonlocal_l = 0.0;
  double nonlocal_tau = -1.0; // upper limit; negative means the horizon

  // Velocity map h: sum of c_j y(tau_j, xi).
  std::vector<double> h_nodes;
  std::vector<double> h_weights;
};

// k0 (2 pi)^{1/p} |cos(2 pi t / T)|, the forcing norm envelope.
double wave_gamma(double t, const WaveInstance& w);

SpectralField wave_nonlinearity(double t, const HistorySegment& seg,
                                const WaveInstance& w, const ModeBasis& basis);
SpectralField wave_impulse(int i, double t, const SpectralField& x_left,
                           const WaveInstance& w, const ModeBasis& basis);
SpectralField wave_impulse_deriv(int i, double t, const SpectralField& x_left,
                                 const WaveInstance& w, const ModeBasis& basis);
SpectralField wave_nonlocal_g(const PiecewiseTrajectory& traj, const WaveInstance& w);
SpectralField wave_nonlocal_h(const PiecewiseTrajectory& traj, const WaveInstance& w);

struct ImpulseBounds {
  double d = 0.0; // sup of the impulse law norm
  double e = 0.0; // sup of its time-derivative norm
};

// Sampled sup of impulse i over [t_begin, s_end] x random real states, with a
// deterministic zero-state probe included (near-extremal for these kernels).
ImpulseBounds estimate_impulse_bounds(int i, const WaveInstance& w,
                                      const ModeBasis& basis, double t_begin,
                                      double s_end, int samples = 64,
                                      unsigned seed = 1234u);

// Wires the instance into a configuration whose impulse windows are already
// set: forcing callable and delay list, impulse laws, nonlocal maps, and the
// bound constants M_g = l and M_h = sum |c_j|.
void bind_wave_instance(ProblemConfig& cfg, const WaveInstance& w);

} // namespace wavectrl
