#include "wavectrl/wave.hpp"

#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

namespace wavectrl {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Moments of cos^2(x(z)) against 1, cos z, sin z; enough to evaluate every
// builtin kernel in closed form per output point.
struct ImpulseMoments {
  double i0 = 0.0, ic = 0.0, is = 0.0;
};

ImpulseMoments impulse_moments(const SpectralField& x_left, const ModeBasis& basis) {
  const Eigen::VectorXd v = evaluate_on_grid(x_left, basis);
  ImpulseMoments m;
  const int M = basis.grid_size;
  for (int k = 0; k < M; ++k) {
    const double z = kTwoPi * k / M;
    const double c = std::cos(v[k]);
    const double c2 = c * c;
    m.i0 += c2;
    m.ic += std::cos(z) * c2;
    m.is += std::sin(z) * c2;
  }
  const double h = kTwoPi / M;
  m.i0 *= h;
  m.ic *= h;
  m.is *= h;
  return m;
}

SpectralField impulse_eval(int i, double t, const SpectralField& x_left,
                           const WaveInstance& w, const ModeBasis& basis,
                           bool deriv) {
  if (i < 0 || i >= static_cast<int>(w.impulse_kernels.size()))
    throw std::invalid_argument("impulse kernel index out of range");
  const auto& ker = w.impulse_kernels[static_cast<size_t>(i)];
  const ImpulseMoments m = impulse_moments(x_left, basis);
  Eigen::VectorXd out(basis.grid_size);
  switch (ker.family) {
    case WaveInstance::ImpulseKernel::Family::CosineDecay: {
      const double scale = (deriv ? -1.0 : 1.0) * ker.gain * std::exp(-t);
      for (int k = 0; k < basis.grid_size; ++k) {
        const double xi = kTwoPi * k / basis.grid_size;
        out[k] = scale * (m.i0 + std::cos(xi) * m.ic + std::sin(xi) * m.is);
      }
      break;
    }
    case WaveInstance::ImpulseKernel::Family::Flat: {
      if (deriv)
        out.setZero();
      else
        out.setConstant(ker.gain * m.i0);
      break;
    }
    default:
      throw std::invalid_argument("impulse kernel family has no derivative rule");
  }
  return project_to_modes(out, basis);
}

} // namespace

double wave_gamma(double t, const WaveInstance& w) {
  return w.k0 * std::pow(kTwoPi, 1.0 / w.p) *
         std::abs(std::cos(kTwoPi * t / w.horizon));
}

SpectralField wave_nonlinearity(double t, const HistorySegment& seg,
                                const WaveInstance& w, const ModeBasis& basis) {
  if (seg.delay() < w.delay_r - 1e-12)
    throw std::domain_error("history segment shorter than the forcing delay");
  const SpectralField xs = seg.value_at_offset(-w.delay_r);
  const Eigen::VectorXd v = evaluate_on_grid(xs, basis);
  const double gain = w.k0 * std::cos(kTwoPi * t / w.horizon);
  Eigen::VectorXd out(basis.grid_size);
  for (int k = 0; k < basis.grid_size; ++k) out[k] = gain * std::sin(v[k]);
  return project_to_modes(out, basis);
}

SpectralField wave_impulse(int i, double t, const SpectralField& x_left,
                           const WaveInstance& w, const ModeBasis& basis) {
  return impulse_eval(i, t, x_left, w, basis, false);
}

SpectralField wave_impulse_deriv(int i, double t, const SpectralField& x_left,
                                 const WaveInstance& w, const ModeBasis& basis) {
  return impulse_eval(i, t, x_left, w, basis, true);
}

SpectralField wave_nonlocal_g(const PiecewiseTrajectory& traj, const WaveInstance& w) {
  const ModeBasis& basis = traj.basis();
  if (w.nonlocal_l == 0.0) return SpectralField::zero(basis, true);
  const double r = traj.delay();
  const double tau = w.nonlocal_tau < 0.0 ? traj.horizon() : w.nonlocal_tau;
  if (tau > traj.horizon() + 1e-12)
    throw std::invalid_argument("nonlocal upper limit exceeds the horizon");
  if (tau <= -r + 1e-12)
    throw std::invalid_argument("nonlocal upper limit must exceed -q");
  const int ja = 0;
  const int je = traj.index_of(tau);
  const double rho = w.nonlocal_l / (tau + r);

  // Jump-aware trapezoid on the trajectory grid: one-sided values at the
  // nonlocal jump (t = 0) and at every impulse jump.
  std::set<int> breaks{ja, je};
  if (traj.zero_index() > ja && traj.zero_index() < je)
    breaks.insert(traj.zero_index());
  for (const auto& [j, v] : traj.right_limits())
    if (j > ja && j < je) breaks.insert(j);

  const auto grid_log = [&](const SpectralField& f) {
    Eigen::VectorXd g = evaluate_on_grid(f, basis);
    for (int k = 0; k < g.size(); ++k) g[k] = std::log1p(std::abs(g[k]));
    return g;
  };
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(basis.grid_size);
  const double dt = traj.dt();
  const std::vector<int> bs(breaks.begin(), breaks.end());
  for (size_t b = 0; b + 1 < bs.size(); ++b) {
    Eigen::VectorXd prev = grid_log(traj.right_limit(bs[b]));
    for (int j = bs[b] + 1; j <= bs[b + 1]; ++j) {
      const Eigen::VectorXd cur = grid_log(traj.left_limit(j));
      acc += (0.5 * dt) * (prev + cur);
      prev = cur;
    }
  }
  return project_to_modes(rho * acc, basis);
}

SpectralField wave_nonlocal_h(const PiecewiseTrajectory& traj, const WaveInstance& w) {
  require(w.h_nodes.size() == w.h_weights.size(),
          "nonlocal velocity nodes/weights mismatch");
  SpectralField out = SpectralField::zero(traj.basis(), true);
  for (size_t j = 0; j < w.h_nodes.size(); ++j)
    out += w.h_weights[j] * traj.value_at_time(w.h_nodes[j]);
  return out;
}

ImpulseBounds estimate_impulse_bounds(int i, const WaveInstance& w,
                                      const ModeBasis& basis, double t_begin,
                                      double s_end, int samples, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  ImpulseBounds out;
  const auto probe = [&](const SpectralField& x) {
    for (const double t : {t_begin, 0.5 * (t_begin + s_end), s_end}) {
      out.d = std::max(out.d, l2_norm(wave_impulse(i, t, x, w, basis)));
      out.e = std::max(out.e, l2_norm(wave_impulse_deriv(i, t, x, w, basis)));
    }
  };
  probe(SpectralField::zero(basis, true));
  for (int s = 0; s < samples; ++s) {
    SpectralField x = SpectralField::zero(basis, true);
    for (int n = 0; n <= basis.n_modes; ++n) {
      const Complex c(unif(rng), n == 0 ? 0.0 : unif(rng));
      x.coeff(n) = kTwoPi * c;
      if (n > 0) x.coeff(-n) = std::conj(kTwoPi * c);
    }
    probe(x);
  }
  return out;
}

void bind_wave_instance(ProblemConfig& cfg, const WaveInstance& w) {
  require(w.k0 >= 0.0, "forcing gain must be nonnegative");
  require(w.nonlocal_l >= 0.0 && std::isfinite(w.nonlocal_l),
          "nonlocal position mass must be finite and nonnegative");
  require(std::abs(w.horizon - cfg.horizon) <= 1e-12 * std::max(1.0, cfg.horizon),
          "wave instance horizon differs from the problem horizon");
  require(w.p == cfg.p, "duality exponent mismatch between instance and problem");
  require(w.impulse_kernels.size() == cfg.impulses.size(),
          "one impulse kernel per impulse window required");

  const ModeBasis basis = cfg.basis;
  if (w.k0 > 0.0) {
    require(w.delay_r > 0.0 && w.delay_r <= cfg.delay + 1e-12,
            "forcing delay must lie in (0, q]");
    cfg.forcing = [w, basis](double t, const HistorySegment& seg) {
      return wave_nonlinearity(t, seg, w, basis);
    };
    cfg.forcing_delays = {w.delay_r};
  }

  for (size_t k = 0; k < cfg.impulses.size(); ++k) {
    const int ki = static_cast<int>(k);
    cfg.impulses[k].state_law = [w, basis, ki](double t, const SpectralField& x) {
      return wave_impulse(ki, t, x, w, basis);
    };
    cfg.impulses[k].velocity_law = [w, basis, ki](double t, const SpectralField& x) {
      return wave_impulse_deriv(ki, t, x, w, basis);
    };
  }

  const double tau = w.nonlocal_tau < 0.0 ? cfg.horizon : w.nonlocal_tau;
  require(tau <= cfg.horizon + 1e-12, "nonlocal upper limit exceeds the horizon");
  require(tau > -cfg.delay + 1e-12, "nonlocal upper limit must exceed -q");
  if (w.nonlocal_l > 0.0) {
    cfg.node_of(tau); // must sit on the solver grid
    cfg.nonlocal_state = [w](const PiecewiseTrajectory& x) {
      return wave_nonlocal_g(x, w);
    };
  }
  cfg.bound_m_g = w.nonlocal_l; // exact: constant weight of mass l, log1p(u) <= u

  if (!w.h_nodes.empty()) {
    require(w.h_nodes.size() == w.h_weights.size(),
            "nonlocal velocity nodes/weights mismatch");
    double mh = 0.0;
    for (size_t j = 0; j < w.h_nodes.size(); ++j) {
      require(w.h_weights[j] > 0.0, "nonlocal velocity weights must be positive");
      require(w.h_nodes[j] >= -cfg.delay - 1e-12 &&
                  w.h_nodes[j] <= cfg.horizon + 1e-12,
              "nonlocal velocity node outside [-q, T]");
      mh += std::abs(w.h_weights[j]);
    }
    cfg.nonlocal_velocity = [w](const PiecewiseTrajectory& x) {
      return wave_nonlocal_h(x, w);
    };
    cfg.bound_m_h = mh;
  } else {
    cfg.bound_m_h = 0.0;
  }
}

} // namespace wavectrl
