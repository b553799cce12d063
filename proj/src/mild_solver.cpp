#include "wavectrl/mild_solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "wavectrl/quadrature.hpp"

namespace wavectrl {

namespace {

bool on_grid(double len, double dt) {
  const double k = len / dt;
  return std::abs(k - std::llround(k)) <= 1e-6 * std::max(1.0, std::abs(k));
}

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

struct Workspace {
  int cells = 0, zero = 0, dim = 0, N = 0, K = 0;
  std::vector<int> jt, js; // impulse endpoints as table node indices
  std::vector<std::vector<int>> cuts;
};

Workspace make_workspace(const ProblemConfig& cfg) {
  Workspace ws;
  ws.cells = cfg.cells();
  ws.zero = cfg.delay > 0.0 ? static_cast<int>(std::llround(cfg.delay / cfg.dt)) : 0;
  ws.N = cfg.basis.n_modes;
  ws.dim = 2 * ws.N + 1;
  ws.K = static_cast<int>(cfg.impulses.size());
  for (const auto& imp : cfg.impulses) {
    ws.jt.push_back(cfg.node_of(imp.t_begin));
    ws.js.push_back(cfg.node_of(imp.s_end));
  }
  ws.cuts = interval_cuts(cfg);
  return ws;
}

// Forcing samples and their inverse-weighted prefix integrals over one
// control interval.  Samples at cut nodes are one-sided per block.
struct ForcingData {
  bool active = false;
  bool all_real = true;
  std::vector<std::vector<Complex>> q0, q1; // [mode][j - a]
};

ForcingData forcing_prefixes(const ProblemConfig& cfg, const EvolutionTable& table,
                             const PiecewiseTrajectory& x, const std::vector<int>& cuts) {
  ForcingData fd;
  const int a = cuts.front(), e = cuts.back();
  if (!cfg.forcing || a == e) return fd;
  fd.active = true;
  const int N = cfg.basis.n_modes;
  const int dim = 2 * N + 1;
  std::vector<Eigen::VectorXcd> left(static_cast<size_t>(e - a) + 1);
  std::map<int, Eigen::VectorXcd> right;
  const auto eval = [&](int j, Side side) {
    const SpectralField f =
        cfg.forcing(j * cfg.dt, HistorySegment::view(x, j * cfg.dt, side));
    if (f.c.size() != dim)
      throw std::invalid_argument("forcing returned a field of wrong dimension");
    fd.all_real = fd.all_real && f.real_field;
    return f.c;
  };
  for (int j = a + 1; j <= e; ++j) left[j - a] = eval(j, Side::Left);
  for (size_t b = 0; b + 1 < cuts.size(); ++b)
    right[cuts[b]] = eval(cuts[b], Side::Right);

  fd.q0.resize(dim);
  fd.q1.resize(dim);
  for (int n = -N; n <= N; ++n) {
    const auto g = [&](int j, Side s) -> Complex {
      const Eigen::VectorXcd& v = s == Side::Right ? right.at(j) : left[j - a];
      return v(n + N);
    };
    fd.q0[n + N] = blocked_prefix<Complex>(cuts, cfg.dt, [&](int j, Side s) {
      return table.node_inverse(n, j)(0, 1) * g(j, s);
    });
    fd.q1[n + N] = blocked_prefix<Complex>(cuts, cfg.dt, [&](int j, Side s) {
      return table.node_inverse(n, j)(1, 1) * g(j, s);
    });
  }
  return fd;
}

// Restart data of interval i: position/velocity at its anchor time.
struct IntervalAnchors {
  SpectralField pos, vel;
};

IntervalAnchors interval_anchors(int i, const PiecewiseTrajectory& x,
                                 const ProblemConfig& cfg, const Workspace& ws) {
  IntervalAnchors an;
  if (i == 0) {
    an.pos = cfg.history(0.0);
    require(an.pos.c.size() == ws.dim, "initial history has wrong dimension");
    if (cfg.nonlocal_state) an.pos += cfg.nonlocal_state(x);
    an.vel = cfg.velocity;
    if (cfg.nonlocal_velocity) an.vel += cfg.nonlocal_velocity(x);
  } else {
    const auto& imp = cfg.impulses[static_cast<size_t>(i) - 1];
    const SpectralField& xm = x.value(ws.zero + ws.jt[i - 1]);
    an.pos = imp.state_law(imp.s_end, xm);
    an.vel = imp.velocity_law(imp.s_end, xm);
    require(an.pos.c.size() == ws.dim && an.vel.c.size() == ws.dim,
            "impulse law returned a field of wrong dimension");
  }
  return an;
}

SpectralField defect_from(const IntervalAnchors& an, const ForcingData& fd,
                          const ProblemConfig& cfg, const EvolutionTable& table,
                          const std::vector<int>& cuts) {
  const int N = cfg.basis.n_modes;
  const int a = cuts.front(), e = cuts.back();
  SpectralField d = SpectralField::zero(cfg.basis, false);
  for (int n = -N; n <= N; ++n) {
    const FundamentalPair pr = table.pair_indices(n, e, a);
    Complex val = cfg.target.coeff(n) - pr.c * an.pos.coeff(n) - pr.s * an.vel.coeff(n);
    if (fd.active) {
      const Eigen::Matrix2cd m = table.node_matrix(n, e);
      const int len = e - a;
      val -= m(0, 0) * fd.q0[n + N][len] + m(0, 1) * fd.q1[n + N][len];
    }
    d.coeff(n) = val;
  }
  if (cfg.target.real_field && an.pos.real_field && an.vel.real_field &&
      (!fd.active || fd.all_real))
    symmetrize_real(d);
  return d;
}

} // namespace

void ProblemConfig::validate() const {
  require(basis.n_modes >= 0 && basis.grid_size >= 2 * basis.n_modes + 1,
          "mode basis is malformed");
  require(horizon > 0.0, "horizon must be positive");
  require(dt > 0.0, "time step must be positive");
  require(on_grid(horizon, dt), "time step must divide the horizon");
  require(delay >= 0.0, "delay must be nonnegative");
  require(delay == 0.0 || on_grid(delay, dt), "time step must divide the delay");
  require(lambda > 0.0, "lambda must be positive");
  require(p >= 2.0, "duality exponent must be >= 2");
  require(static_cast<bool>(history), "initial history callable is required");
  const int dim = 2 * basis.n_modes + 1;
  require(velocity.c.size() == dim, "velocity datum has wrong dimension");
  require(target.c.size() == dim, "target has wrong dimension");
  require(fp_tol > 0.0, "fixed-point tolerance must be positive");
  require(fp_max_iters >= 1, "fixed-point iteration budget must be positive");
  require(gramian_nodes >= 8 && gramian_nodes % 2 == 0,
          "Gramian quadrature needs an even cell count >= 8");
  double prev = 0.0;
  bool first = true;
  for (const auto& imp : impulses) {
    require(static_cast<bool>(imp.state_law) && static_cast<bool>(imp.velocity_law),
            "impulse laws must be callable");
    require(first ? imp.t_begin > 0.0 : imp.t_begin >= prev - 1e-12,
            "impulse intervals must be ordered and start after 0");
    require(imp.s_end >= imp.t_begin - 1e-12, "impulse interval is reversed");
    require(imp.s_end <= horizon + 1e-12, "impulse interval exceeds the horizon");
    require(on_grid(imp.t_begin, dt) && on_grid(imp.s_end, dt),
            "impulse endpoints must sit on the time grid");
    prev = imp.s_end;
    first = false;
  }
  for (double r : forcing_delays) {
    require(r > 0.0 && r <= delay + 1e-12, "forcing delay outside (0, q]");
    require(on_grid(r, dt), "forcing delays must sit on the time grid");
  }
}

int ProblemConfig::cells() const {
  return static_cast<int>(std::llround(horizon / dt));
}

int ProblemConfig::node_of(double t) const {
  const double k = t / dt;
  const long j = std::llround(k);
  if (std::abs(k - j) > 1e-6 * std::max(1.0, std::abs(k)))
    throw std::invalid_argument("time does not sit on the solver grid");
  return static_cast<int>(j);
}

std::vector<std::vector<int>> interval_cuts(const ProblemConfig& cfg) {
  const int cells = cfg.cells();
  const int K = static_cast<int>(cfg.impulses.size());
  std::vector<int> jumps{0};
  std::vector<int> jt(K), js(K);
  for (int k = 0; k < K; ++k) {
    jt[k] = cfg.node_of(cfg.impulses[k].t_begin);
    js[k] = cfg.node_of(cfg.impulses[k].s_end);
    jumps.push_back(jt[k]);
    jumps.push_back(js[k]);
  }
  std::vector<int> shifts;
  for (double r : cfg.forcing_delays) shifts.push_back(cfg.node_of(r));
  std::vector<std::vector<int>> out;
  for (int i = 0; i <= K; ++i) {
    const int a = (i == 0) ? 0 : js[i - 1];
    const int e = (i == K) ? cells : jt[i];
    std::set<int> interior;
    for (int jr : shifts)
      for (int j : jumps) {
        const int c = j + jr;
        if (c > a && c < e) interior.insert(c);
      }
    std::vector<int> v{a};
    v.insert(v.end(), interior.begin(), interior.end());
    v.push_back(e);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Gramian> interval_gramians(const ProblemConfig& cfg,
                                       const EvolutionTable& table,
                                       const ControlOperator& B) {
  std::vector<Gramian> out;
  for (const auto& cuts : interval_cuts(cfg))
    out.push_back(gramian_on_grid(table, B, cuts));
  return out;
}

SpectralField interval_defect(int i, const PiecewiseTrajectory& traj,
                              const ProblemConfig& cfg, const EvolutionTable& table) {
  const Workspace ws = make_workspace(cfg);
  if (i < 0 || i > ws.K) throw std::out_of_range("control interval index out of range");
  const IntervalAnchors an = interval_anchors(i, traj, cfg, ws);
  const ForcingData fd = forcing_prefixes(cfg, table, traj, ws.cuts[i]);
  return defect_from(an, fd, cfg, table, ws.cuts[i]);
}

PiecewiseTrajectory free_trajectory(const ProblemConfig& cfg,
                                    const EvolutionTable& table) {
  const Workspace ws = make_workspace(cfg);
  std::vector<SpectralField> samples(static_cast<size_t>(ws.zero + ws.cells) + 1);
  for (int j = 0; j <= ws.zero; ++j) {
    samples[j] = cfg.history(-cfg.delay + j * cfg.dt);
    require(samples[j].c.size() == ws.dim, "initial history has wrong dimension");
  }
  const SpectralField phi0 = samples[ws.zero];
  const bool real_run = phi0.real_field && cfg.velocity.real_field;
  for (int j = 1; j <= ws.cells; ++j) {
    SpectralField fv = SpectralField::zero(cfg.basis, false);
    for (int n = -ws.N; n <= ws.N; ++n) {
      const Eigen::Matrix2cd m = table.node_matrix(n, j);
      fv.coeff(n) = m(0, 0) * phi0.coeff(n) + m(0, 1) * cfg.velocity.coeff(n);
    }
    if (real_run) symmetrize_real(fv);
    samples[ws.zero + j] = std::move(fv);
  }
  SpectralField hist_end = phi0;
  return PiecewiseTrajectory(cfg.basis, cfg.delay, cfg.horizon, cfg.dt,
                             std::move(samples), std::move(hist_end));
}

PiecewiseTrajectory apply_phi(const PiecewiseTrajectory& x_in, const ProblemConfig& cfg,
                              const EvolutionTable& table, const ControlOperator& B,
                              const std::vector<Gramian>& gramians,
                              ApplyDiagnostics* diag) {
  const Workspace ws = make_workspace(cfg);
  require(gramians.size() == ws.cuts.size(), "one Gramian per control interval required");
  require(x_in.size() == ws.zero + ws.cells + 1 &&
              std::abs(x_in.dt() - cfg.dt) <= 1e-12 * cfg.dt,
          "input trajectory grid mismatch");

  PiecewiseTrajectory out = x_in; // history samples carried over untouched
  out.clear_right_limits();
  if (diag) {
    diag->defects.clear();
    diag->z.clear();
    diag->control_modes.clear();
  }

  for (int i = 0; i <= ws.K; ++i) {
    const auto& cuts = ws.cuts[i];
    const int a = cuts.front(), e = cuts.back();
    // Nonlocal terms read the input iterate; the impulse left limit reads
    // out's own preceding branch (final at this point), so the plateau, the
    // defect anchors, and any later re-evaluation share it bitwise.
    const IntervalAnchors an = interval_anchors(i, i == 0 ? x_in : out, cfg, ws);

    if (i >= 1) { // impulse plateau (t_i, s_i]
      const auto& imp = cfg.impulses[static_cast<size_t>(i) - 1];
      const SpectralField& xm = out.value(ws.zero + ws.jt[i - 1]);
      out.set_right_limit(ws.zero + ws.jt[i - 1], imp.state_law(imp.t_begin, xm));
      for (int j = ws.jt[i - 1] + 1; j <= ws.js[i - 1]; ++j)
        out.mutable_value(ws.zero + j) = imp.state_law(j * cfg.dt, xm);
    }

    const ForcingData fd = forcing_prefixes(cfg, table, x_in, cuts);
    const SpectralField d = defect_from(an, fd, cfg, table, cuts);
    const SpectralField z =
        resolvent_solve(cfg.lambda, gramians[i], d, cfg.p, cfg.basis);
    SpectralField w = duality_map(z, cfg.p, cfg.basis);
    w.c /= cfg.lambda;
    if (diag) {
      diag->defects.push_back(d);
      diag->z.push_back(z);
      diag->control_modes.push_back(w);
    }
    if (a == e) continue; // empty control window, no branch nodes to fill

    // Control drive Bu at every node of [a, e].
    const int len = e - a;
    std::vector<Eigen::VectorXcd> bu(static_cast<size_t>(len) + 1);
    for (int j = a; j <= e; ++j) {
      Eigen::VectorXcd arg(ws.dim);
      for (int n = -ws.N; n <= ws.N; ++n)
        arg(n + ws.N) = std::conj(table.pair_indices(n, e, j).s) * w.c(n + ws.N);
      bu[j - a] = B.mat * (B.mat.adjoint() * arg).eval();
    }

    // Branch value per mode by variation of constants around the anchor.
    std::vector<Eigen::VectorXcd> vals(static_cast<size_t>(len) + 1,
                                       Eigen::VectorXcd::Zero(ws.dim));
    for (int n = -ws.N; n <= ws.N; ++n) {
      const auto q0u = blocked_prefix<Complex>(cuts, cfg.dt, [&](int j, Side) {
        return table.node_inverse(n, j)(0, 1) * bu[j - a](n + ws.N);
      });
      const auto q1u = blocked_prefix<Complex>(cuts, cfg.dt, [&](int j, Side) {
        return table.node_inverse(n, j)(1, 1) * bu[j - a](n + ws.N);
      });
      for (int j = a; j <= e; ++j) {
        const FundamentalPair pr = table.pair_indices(n, j, a);
        const Eigen::Matrix2cd m = table.node_matrix(n, j);
        Complex q0 = q0u[j - a], q1 = q1u[j - a];
        if (fd.active) {
          q0 += fd.q0[n + ws.N][j - a];
          q1 += fd.q1[n + ws.N][j - a];
        }
        vals[j - a](n + ws.N) = pr.c * an.pos.coeff(n) + pr.s * an.vel.coeff(n) +
                                m(0, 0) * q0 + m(0, 1) * q1;
      }
    }
    const bool branch_real = an.pos.real_field && an.vel.real_field &&
                             w.real_field && B.real_preserving &&
                             (!fd.active || fd.all_real);
    const int first = (i == 0) ? a : a + 1; // anchor node belongs to branch 2 for i >= 1
    for (int j = first; j <= e; ++j) {
      SpectralField fv = SpectralField::zero(cfg.basis, false);
      fv.c = std::move(vals[j - a]);
      if (branch_real) symmetrize_real(fv);
      out.mutable_value(ws.zero + j) = std::move(fv);
    }
  }
  return out;
}

double trajectory_sup_distance(const PiecewiseTrajectory& a,
                               const PiecewiseTrajectory& b) {
  require(a.size() == b.size() && a.zero_index() == b.zero_index(),
          "trajectory grids differ");
  double sup = 0.0;
  for (int j = a.zero_index(); j < a.size(); ++j)
    sup = std::max(sup, l2_norm(a.value(j) - b.value(j)));
  for (const auto& [j, v] : a.right_limits())
    sup = std::max(sup, l2_norm(v - b.right_limit(j)));
  for (const auto& [j, v] : b.right_limits())
    sup = std::max(sup, l2_norm(a.right_limit(j) - v));
  return sup;
}

SolveResult fixed_point_solve(const ProblemConfig& cfg, int threads) {
  cfg.validate();
  auto table = std::make_shared<EvolutionTable>(cfg.basis, cfg.advection, cfg.horizon,
                                                cfg.dt, threads);
  SolveResult res;
  res.b_op = build_control_operator(cfg.kernel, cfg.basis);
  res.gramians = interval_gramians(cfg, *table, res.b_op);
  res.table = table;

  PiecewiseTrajectory x = free_trajectory(cfg, *table);
  ApplyDiagnostics diag;
  for (int k = 1; k <= cfg.fp_max_iters; ++k) {
    PiecewiseTrajectory next = apply_phi(x, cfg, *table, res.b_op, res.gramians, &diag);
    const double r = trajectory_sup_distance(next, x);
    res.residual_history.push_back(r);
    res.iterations = k;
    x = std::move(next);
    if (r <= cfg.fp_tol) {
      res.converged = true;
      break;
    }
  }
  res.defects = std::move(diag.defects);
  res.z = std::move(diag.z);
  res.control_modes = std::move(diag.control_modes);
  const Workspace ws = make_workspace(cfg);
  res.terminal_error = l2_norm(x.value(ws.zero + ws.cells) - cfg.target);
  res.predicted_error = res.z.empty() ? 0.0 : l2_norm(res.z.back());
  res.trajectory = std::move(x);
  return res;
}

SpectralField control_at(const SolveResult& run, const ProblemConfig& cfg, double t) {
  require(run.table && !run.gramians.empty() &&
              run.gramians.size() == run.control_modes.size(),
          "solve result carries no control data");
  const double tol = 1e-9 * std::max(1.0, cfg.horizon);
  if (t < -tol || t > cfg.horizon + tol)
    throw std::domain_error("control time outside [0, T]");
  const int N = cfg.basis.n_modes;
  for (size_t i = 0; i < run.gramians.size(); ++i) {
    const auto& g = run.gramians[i];
    if (t < g.a - tol || t > g.b + tol) continue;
    // The preceding hold owns its right endpoint s_i, so the restarted
    // control window is left-open: u vanishes on all of (t_i, s_i].
    if (i > 0 && t <= g.a + tol) continue;
    const auto& w = run.control_modes[i];
    Eigen::VectorXcd arg(2 * N + 1);
    for (int n = -N; n <= N; ++n) {
      const Complex s = run.table->pair(n, g.b, std::min(t, g.b)).s;
      arg(n + N) = std::conj(s) * w.c(n + N);
    }
    SpectralField u = SpectralField::zero(cfg.basis, false);
    u.c = run.b_op.mat.adjoint() * arg;
    if (w.real_field && run.b_op.real_preserving) symmetrize_real(u);
    return u;
  }
  return SpectralField::zero(cfg.basis, true); // impulse interval: indicator
}

FeasibilityReport feasibility_value(double m, double m_tilde, double m_b, double m_g,
                                    double m_h, double horizon, double lambda) {
  FeasibilityReport rep;
  rep.m = m;
  rep.m_tilde = m_tilde;
  rep.m_b = m_b;
  rep.k = m * m_g + m_tilde * m_h;
  rep.value = rep.k * (1.0 + (m_tilde * m_b) * (m_tilde * m_b) * horizon / lambda);
  rep.feasible = rep.value < 1.0;
  return rep;
}

FeasibilityReport feasibility_check(const ProblemConfig& cfg,
                                    const EvolutionTable& table,
                                    const ControlOperator& B) {
  if (cfg.bound_m_g < 0.0 || cfg.bound_m_h < 0.0)
    throw std::invalid_argument(
        "feasibility check needs the nonlocal bound constants M_g and M_h");
  return feasibility_value(table.bound_m(), table.bound_m_tilde(), B.norm,
                           cfg.bound_m_g, cfg.bound_m_h, cfg.horizon, cfg.lambda);
}

namespace {

// Reads the converged trajectory at arbitrary times: exact history callable
// for t < 0, one-sided limits on grid nodes, cubic Lagrange clamped to the
// enclosing smooth segment elsewhere.
class TrajectoryReader {
 public:
  TrajectoryReader(const PiecewiseTrajectory& x, const ProblemConfig& cfg,
                   const Workspace& ws)
      : x_(x), cfg_(cfg), dt_(cfg.dt), zero_(ws.zero) {
    // Segment ends at every quadrature cut: the state loses smoothness not
    // just at jump nodes but wherever a forcing delay shifts one.
    for (const auto& cuts : ws.cuts)
      bounds_.insert(bounds_.end(), cuts.begin(), cuts.end());
    bounds_.push_back(0);
    bounds_.push_back(ws.cells);
    std::sort(bounds_.begin(), bounds_.end());
    bounds_.erase(std::unique(bounds_.begin(), bounds_.end()), bounds_.end());
  }

  SpectralField at(double tau, Side side) const {
    if (tau < -1e-12) return cfg_.history(tau);
    const double pos = tau / dt_;
    const long jr = std::llround(pos);
    if (std::abs(pos - jr) < 1e-7) {
      const int j = static_cast<int>(jr);
      return side == Side::Right ? x_.right_limit(zero_ + j) : x_.left_limit(zero_ + j);
    }
    const int base = std::clamp(static_cast<int>(std::floor(pos)), bounds_.front(),
                                bounds_.back() - 1);
    const auto it = std::upper_bound(bounds_.begin(), bounds_.end(), base);
    const int hi = *it;
    const int lo = *(it - 1);
    const auto node = [&](int k) -> const SpectralField& {
      return k == lo ? x_.right_limit(zero_ + k) : x_.value(zero_ + k);
    };
    if (hi - lo < 3) { // short segment: linear between the bracketing nodes
      const double frac = pos - base;
      SpectralField outp = node(base);
      const SpectralField& nb = node(base + 1);
      outp.c = (1.0 - frac) * outp.c + frac * nb.c;
      outp.real_field = outp.real_field && nb.real_field;
      return outp;
    }
    const int m = std::clamp(base - 1, lo, hi - 3);
    const double u = pos - m;
    const double w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    const double w1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    const double w2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    const double w3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    const SpectralField &f0 = node(m), &f1 = node(m + 1), &f2 = node(m + 2),
                        &f3 = node(m + 3);
    SpectralField outp = SpectralField::zero(cfg_.basis, false);
    outp.c = w0 * f0.c + w1 * f1.c + w2 * f2.c + w3 * f3.c;
    outp.real_field =
        f0.real_field && f1.real_field && f2.real_field && f3.real_field;
    return outp;
  }

 private:
  const PiecewiseTrajectory& x_;
  const ProblemConfig& cfg_;
  double dt_;
  int zero_;
  std::vector<int> bounds_;
};

} // namespace

double MildResidualReport::sup() const {
  return std::max({branch_initial, branch_impulse, branch_post});
}

MildResidualReport verify_mild_solution(const SolveResult& run,
                                        const ProblemConfig& cfg, int threads) {
  cfg.validate();
  require(run.table &&
              run.control_modes.size() == cfg.impulses.size() + 1,
          "verification needs the solver diagnostics");
  const Workspace ws = make_workspace(cfg);
  const auto& x = run.trajectory;
  const double fdt = cfg.dt / 2.0;
  const EvolutionTable ft(cfg.basis, cfg.advection, cfg.horizon, fdt, threads);
  const TrajectoryReader reader(x, cfg, ws);
  MildResidualReport rep;

  for (int i = 0; i <= ws.K; ++i) {
    std::vector<int> fcuts;
    for (int c : ws.cuts[i]) fcuts.push_back(2 * c);
    const int a = fcuts.front(), e = fcuts.back();
    const IntervalAnchors an = interval_anchors(i, x, cfg, ws);
    if (i == 0) {
      rep.initial_identity = l2_norm(x.value(ws.zero) - an.pos);
    } else {
      rep.interface_max = std::max(
          rep.interface_max, l2_norm(x.value(ws.zero + ws.js[i - 1]) - an.pos));

      const auto& imp = cfg.impulses[static_cast<size_t>(i) - 1];
      const SpectralField& xm = x.value(ws.zero + ws.jt[i - 1]);
      rep.branch_impulse =
          std::max(rep.branch_impulse,
                   l2_norm(x.right_limit(ws.zero + ws.jt[i - 1]) -
                           imp.state_law(imp.t_begin, xm)));
      for (int j = ws.jt[i - 1] + 1; j <= ws.js[i - 1]; ++j)
        rep.branch_impulse =
            std::max(rep.branch_impulse,
                     l2_norm(x.value(ws.zero + j) - imp.state_law(j * cfg.dt, xm)));
      for (int j = ws.jt[i - 1]; j < ws.js[i - 1]; ++j)
        rep.control_support = std::max(
            rep.control_support, l2_norm(control_at(run, cfg, (j + 0.5) * cfg.dt)));
    }
    if (a == e) continue;

    const auto& w = run.control_modes[i];
    const bool factive = static_cast<bool>(cfg.forcing);
    std::vector<Eigen::VectorXcd> fleft;
    std::map<int, Eigen::VectorXcd> fright;
    if (factive) {
      const auto feval = [&](int j, Side side) {
        const double t = j * fdt;
        const HistorySegment seg = HistorySegment::functional(
            cfg.delay,
            [&reader, t, side](double s) { return reader.at(t + s, side); });
        return cfg.forcing(t, seg).c;
      };
      fleft.resize(static_cast<size_t>(e - a) + 1);
      for (int j = a + 1; j <= e; ++j) fleft[j - a] = feval(j, Side::Left);
      for (size_t b = 0; b + 1 < fcuts.size(); ++b)
        fright[fcuts[b]] = feval(fcuts[b], Side::Right);
    }

    std::vector<Eigen::VectorXcd> bu(static_cast<size_t>(e - a) + 1);
    for (int j = a; j <= e; ++j) {
      Eigen::VectorXcd arg(ws.dim);
      for (int n = -ws.N; n <= ws.N; ++n)
        arg(n + ws.N) = std::conj(ft.pair_indices(n, e, j).s) * w.c(n + ws.N);
      bu[j - a] = run.b_op.mat * (run.b_op.mat.adjoint() * arg).eval();
    }

    std::vector<Eigen::VectorXcd> vals(static_cast<size_t>(e - a) + 1,
                                       Eigen::VectorXcd::Zero(ws.dim));
    for (int n = -ws.N; n <= ws.N; ++n) {
      const auto integrand = [&](int j, Side s) -> Complex {
        Complex g = bu[j - a](n + ws.N);
        if (factive)
          g += (s == Side::Right ? fright.at(j) : fleft[j - a])(n + ws.N);
        return g;
      };
      const auto q0 = blocked_prefix<Complex>(fcuts, fdt, [&](int j, Side s) {
        return ft.node_inverse(n, j)(0, 1) * integrand(j, s);
      });
      const auto q1 = blocked_prefix<Complex>(fcuts, fdt, [&](int j, Side s) {
        return ft.node_inverse(n, j)(1, 1) * integrand(j, s);
      });
      for (int j = a; j <= e; ++j) {
        const FundamentalPair pr = ft.pair_indices(n, j, a);
        const Eigen::Matrix2cd m = ft.node_matrix(n, j);
        vals[j - a](n + ws.N) = pr.c * an.pos.coeff(n) + pr.s * an.vel.coeff(n) +
                                m(0, 0) * q0[j - a] + m(0, 1) * q1[j - a];
      }
    }

    double& slot = (i == 0) ? rep.branch_initial : rep.branch_post;
    const int first = (i == 0) ? a : a + 1;
    for (int j = first; j <= e; ++j) {
      SpectralField pred = SpectralField::zero(cfg.basis, false);
      pred.c = std::move(vals[j - a]);
      const SpectralField actual = (j % 2 == 0)
                                       ? x.value(ws.zero + j / 2)
                                       : reader.at(j * fdt, Side::Left);
      slot = std::max(slot, l2_norm(pred - actual));
    }
  }
  return rep;
}

} // namespace wavectrl
