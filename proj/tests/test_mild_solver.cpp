#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "wavectrl/mild_solver.hpp"

using namespace wavectrl;

namespace {

SpectralField real_field(const ModeBasis& basis, std::initializer_list<double> amps) {
  SpectralField f = SpectralField::zero(basis);
  int n = 0;
  for (double a : amps) {
    if (n == 0) {
      f.coeff(0) = Complex(a, 0.0);
    } else {
      f.coeff(n) = Complex(a, 0.3 * a);
      f.coeff(-n) = std::conj(f.coeff(n));
    }
    ++n;
  }
  return f;
}

// Linear problem: no forcing, no impulses, no nonlocal terms.
ProblemConfig linear_config(int n_modes) {
  ProblemConfig cfg;
  cfg.basis = ModeBasis::make(n_modes);
  cfg.horizon = 1.0;
  cfg.delay = 0.2;
  cfg.dt = 1e-3;
  cfg.lambda = 1e-2;
  cfg.advection = Coefficient::cosine(0.3, 1.0);
  const SpectralField hist = real_field(cfg.basis, {0.4, 0.7, -0.2});
  cfg.history = [hist](double) { return hist; };
  cfg.velocity = real_field(cfg.basis, {0.1, -0.3, 0.5});
  cfg.target = real_field(cfg.basis, {1.0, 0.6, 0.2});
  return cfg;
}

ImpulseSpec scaling_impulse(double t_begin, double s_end) {
  ImpulseSpec imp;
  imp.t_begin = t_begin;
  imp.s_end = s_end;
  imp.state_law = [](double t, const SpectralField& x) {
    SpectralField y = x;
    y *= 0.5 * std::cos(t);
    return y;
  };
  imp.velocity_law = [](double t, const SpectralField& x) {
    SpectralField y = x;
    y *= -0.5 * std::sin(t);
    return y;
  };
  return imp;
}

// Semilinear problem: delayed linear forcing, one impulse, nonlocal reads.
ProblemConfig semilinear_config() {
  ProblemConfig cfg = linear_config(4);
  cfg.forcing = [](double, const HistorySegment& seg) {
    SpectralField y = seg.value_at_offset(-0.2);
    y *= 0.05;
    return y;
  };
  cfg.forcing_delays = {0.2};
  cfg.impulses = {scaling_impulse(0.3, 0.5)};
  cfg.nonlocal_state = [](const PiecewiseTrajectory& x) {
    SpectralField y = x.value_at_time(1.0, Side::Left);
    y *= 0.05;
    return y;
  };
  return cfg;
}

} // namespace

TEST_CASE("structural validation accepts the baseline and rejects breakage") {
  ProblemConfig cfg = linear_config(2);
  CHECK_NOTHROW(cfg.validate());

  ProblemConfig c1 = cfg;
  c1.history = nullptr;
  CHECK_THROWS_AS(c1.validate(), std::invalid_argument);
  ProblemConfig c2 = cfg;
  c2.dt = 3e-4; // 1.0 / 3e-4 is not an integer
  CHECK_THROWS_AS(c2.validate(), std::invalid_argument);
  ProblemConfig c3 = cfg;
  c3.delay = 0.25e-3 * 701; // off the dt grid
  CHECK_THROWS_AS(c3.validate(), std::invalid_argument);
  ProblemConfig c4 = cfg;
  c4.lambda = 0.0;
  CHECK_THROWS_AS(c4.validate(), std::invalid_argument);
  ProblemConfig c5 = cfg;
  c5.p = 1.5;
  CHECK_THROWS_AS(c5.validate(), std::invalid_argument);
  ProblemConfig c6 = cfg;
  c6.velocity = SpectralField::zero(ModeBasis::make(3));
  CHECK_THROWS_AS(c6.validate(), std::invalid_argument);
  ProblemConfig c7 = cfg;
  c7.fp_max_iters = 0;
  CHECK_THROWS_AS(c7.validate(), std::invalid_argument);
  ProblemConfig c8 = cfg;
  c8.gramian_nodes = 33;
  CHECK_THROWS_AS(c8.validate(), std::invalid_argument);
}

TEST_CASE("impulse ordering and grid placement are enforced") {
  ProblemConfig cfg = linear_config(2);
  cfg.impulses = {scaling_impulse(0.3, 0.5)};
  CHECK_NOTHROW(cfg.validate());

  ProblemConfig c1 = cfg;
  c1.impulses[0].t_begin = 0.0; // must start strictly after 0
  CHECK_THROWS_AS(c1.validate(), std::invalid_argument);
  ProblemConfig c2 = cfg;
  c2.impulses[0].s_end = 0.2; // reversed
  CHECK_THROWS_AS(c2.validate(), std::invalid_argument);
  ProblemConfig c3 = cfg;
  c3.impulses[0].s_end = 1.1; // past the horizon
  CHECK_THROWS_AS(c3.validate(), std::invalid_argument);
  ProblemConfig c4 = cfg;
  c4.impulses[0].t_begin = 0.30041; // off grid
  CHECK_THROWS_AS(c4.validate(), std::invalid_argument);
  ProblemConfig c5 = cfg;
  c5.impulses.push_back(scaling_impulse(0.4, 0.6)); // overlaps the first
  CHECK_THROWS_AS(c5.validate(), std::invalid_argument);
  ProblemConfig c6 = cfg;
  c6.impulses[0].velocity_law = nullptr;
  CHECK_THROWS_AS(c6.validate(), std::invalid_argument);
}

TEST_CASE("forcing delays must lie in (0, q] on the grid") {
  ProblemConfig cfg = linear_config(2);
  cfg.forcing_delays = {0.2};
  CHECK_NOTHROW(cfg.validate());
  cfg.forcing_delays = {0.3}; // exceeds the delay
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.forcing_delays = {0.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.forcing_delays = {0.1001e-1};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("node lookup snaps to the grid and rejects off-grid times") {
  const ProblemConfig cfg = linear_config(2);
  CHECK(cfg.cells() == 1000);
  CHECK(cfg.node_of(0.3) == 300);
  CHECK(cfg.node_of(0.0) == 0);
  CHECK_THROWS_AS(cfg.node_of(0.30041), std::invalid_argument);
}

TEST_CASE("interval cuts mark jump times shifted by each forcing delay") {
  ProblemConfig cfg = semilinear_config();
  const auto cuts = interval_cuts(cfg);
  REQUIRE(cuts.size() == 2);
  // Interval [0, t_1]: the delayed read of the time-zero jump cuts at 0.2.
  CHECK(cuts[0] == std::vector<int>{0, 200, 300});
  // Interval [s_1, T]: the delayed reads of t_1 and s_1 cut at 0.5 and 0.7,
  // but 0.5 is the interval anchor already.
  CHECK(cuts[1] == std::vector<int>{500, 700, 1000});

  cfg.forcing_delays.clear();
  const auto plain = interval_cuts(cfg);
  CHECK(plain[0] == std::vector<int>{0, 300});
  CHECK(plain[1] == std::vector<int>{500, 1000});
}

TEST_CASE("free trajectory reproduces the advection-free closed form") {
  ProblemConfig cfg = linear_config(2);
  cfg.advection = Coefficient::constant(0.0);
  const EvolutionTable table(cfg.basis, cfg.advection, cfg.horizon, cfg.dt);
  const PiecewiseTrajectory x = free_trajectory(cfg, table);
  CHECK(x.zero_index() == 200);
  CHECK(x.size() == 1201);

  const SpectralField phi0 = cfg.history(0.0);
  for (int j = 0; j <= 200; j += 40) {
    const SpectralField& h = x.value(j);
    for (int n = -2; n <= 2; ++n) CHECK(h.coeff(n) == phi0.coeff(n));
  }
  double worst = 0.0;
  for (int j = 0; j <= 1000; j += 37) {
    const double t = j * cfg.dt;
    const SpectralField& v = x.value(200 + j);
    for (int n = -2; n <= 2; ++n) {
      const Complex want = std::cos(n * t) * phi0.coeff(n) +
                           (n == 0 ? t : std::sin(n * t) / n) * cfg.velocity.coeff(n);
      worst = std::max(worst, std::abs(v.coeff(n) - want));
    }
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("defect with zero data equals the target exactly") {
  ProblemConfig cfg = linear_config(2);
  const SpectralField zero = SpectralField::zero(cfg.basis);
  cfg.history = [zero](double) { return zero; };
  cfg.velocity = zero;
  const EvolutionTable table(cfg.basis, cfg.advection, cfg.horizon, cfg.dt);
  const PiecewiseTrajectory x = free_trajectory(cfg, table);
  const SpectralField d = interval_defect(0, x, cfg, table);
  for (int n = -2; n <= 2; ++n) CHECK(d.coeff(n) == cfg.target.coeff(n));
  CHECK_THROWS_AS(interval_defect(1, x, cfg, table), std::out_of_range);
  CHECK_THROWS_AS(interval_defect(-1, x, cfg, table), std::out_of_range);
}

TEST_CASE("defect vanishes when the target is the free endpoint") {
  ProblemConfig cfg = linear_config(3);
  const EvolutionTable table(cfg.basis, cfg.advection, cfg.horizon, cfg.dt);
  cfg.target = apply_C(table, 1.0, 0.0, cfg.history(0.0)) +
               apply_S(table, 1.0, 0.0, cfg.velocity);
  const PiecewiseTrajectory x = free_trajectory(cfg, table);
  CHECK(l2_norm(interval_defect(0, x, cfg, table)) <= 1e-12);
}

// With b = 0, phi = eta = x_T = 0 and constant forcing c the defect is
// -c_n (1 - cos(n t_1)) / n^2 per mode and -c_0 t_1^2 / 2 on mode zero.
TEST_CASE("defect against constant forcing has the closed per-mode form") {
  ProblemConfig cfg = linear_config(2);
  cfg.advection = Coefficient::constant(0.0);
  const SpectralField zero = SpectralField::zero(cfg.basis);
  cfg.history = [zero](double) { return zero; };
  cfg.velocity = zero;
  cfg.target = zero;
  const SpectralField c = real_field(cfg.basis, {0.8, -0.5, 0.3});
  cfg.forcing = [c](double, const HistorySegment&) { return c; };
  const EvolutionTable table(cfg.basis, cfg.advection, cfg.horizon, cfg.dt);
  const PiecewiseTrajectory x = free_trajectory(cfg, table);
  const SpectralField d = interval_defect(0, x, cfg, table);
  for (int n = -2; n <= 2; ++n) {
    const double w = n == 0 ? 0.5 : (1.0 - std::cos(n * 1.0)) / (n * n);
    CHECK(std::abs(d.coeff(n) + w * c.coeff(n)) < 1e-8);
  }
}

TEST_CASE("huge regularization reduces the map to free evolution") {
  ProblemConfig cfg = linear_config(3);
  cfg.lambda = 1e12;
  const EvolutionTable table(cfg.basis, cfg.advection, cfg.horizon, cfg.dt);
  const ControlOperator b = build_control_operator(cfg.kernel, cfg.basis);
  const auto gramians = interval_gramians(cfg, table, b);
  const PiecewiseTrajectory free_x = free_trajectory(cfg, table);
  const PiecewiseTrajectory out = apply_phi(free_x, cfg, table, b, gramians);
  CHECK(trajectory_sup_distance(out, free_x) <= 1e-6);
}

TEST_CASE("the map rejects mismatched inputs") {
  ProblemConfig cfg = linear_config(2);
  const EvolutionTable table(cfg.basis, cfg.advection, cfg.horizon, cfg.dt);
  const ControlOperator b = build_control_operator(cfg.kernel, cfg.basis);
  const auto gramians = interval_gramians(cfg, table, b);
  const PiecewiseTrajectory x = free_trajectory(cfg, table);
  CHECK_THROWS_AS(apply_phi(x, cfg, table, b, {}), std::invalid_argument);
  ProblemConfig longer = cfg;
  longer.delay = 0.4;
  const PiecewiseTrajectory y = free_trajectory(longer, table);
  CHECK_THROWS_AS(apply_phi(y, cfg, table, b, gramians), std::invalid_argument);
}

TEST_CASE("one application fixes history samples and the impulse plateau") {
  ProblemConfig cfg = semilinear_config();
  const EvolutionTable table(cfg.basis, cfg.advection, cfg.horizon, cfg.dt);
  const ControlOperator b = build_control_operator(cfg.kernel, cfg.basis);
  const auto gramians = interval_gramians(cfg, table, b);
  PiecewiseTrajectory x = free_trajectory(cfg, table);
  // Perturb the input away from anything self-consistent.
  for (int j = 350; j <= 450; ++j)
    x.mutable_value(x.zero_index() + j).coeff(1) += Complex(0.2, -0.1);

  const PiecewiseTrajectory out = apply_phi(x, cfg, table, b, gramians);
  for (int j = 0; j < x.zero_index(); ++j) {
    const SpectralField &a = out.value(j), &bv = x.value(j);
    for (int n = -4; n <= 4; ++n) CHECK(a.coeff(n) == bv.coeff(n));
  }
  // The time-zero node is rebuilt as phi(0) + g(x), not carried over.
  const SpectralField anchor = cfg.history(0.0) + cfg.nonlocal_state(x);
  CHECK(l2_norm(out.value(x.zero_index()) - anchor) == 0.0);
  // Plateau values and the right limit at t_1 reproduce the impulse law
  // applied to the output's own left limit, bit for bit.
  const auto& imp = cfg.impulses[0];
  const SpectralField& xm = out.value(out.zero_index() + 300);
  const SpectralField rl = out.right_limit(out.zero_index() + 300);
  const SpectralField want0 = imp.state_law(imp.t_begin, xm);
  for (int n = -4; n <= 4; ++n) CHECK(rl.coeff(n) == want0.coeff(n));
  for (int j = 301; j <= 500; ++j) {
    const SpectralField want = imp.state_law(j * cfg.dt, xm);
    const SpectralField& got = out.value(out.zero_index() + j);
    for (int n = -4; n <= 4; ++n) CHECK(got.coeff(n) == want.coeff(n));
  }
}

TEST_CASE("a linear problem converges in two sweeps with the exact identity") {
  const ProblemConfig cfg = linear_config(3);
  const SolveResult run = fixed_point_solve(cfg);
  CHECK(run.converged);
  CHECK(run.iterations <= 2);
  REQUIRE(run.z.size() == 1);
  // Terminal identity x(T) - x_T = -lambda R(lambda, Psi) g.
  const SpectralField xT = run.trajectory.value(run.trajectory.size() - 1);
  CHECK(l2_norm(xT - cfg.target + run.z.back()) <= 1e-8);
  CHECK(std::abs(run.terminal_error - run.predicted_error) <= 1e-8);
  CHECK(run.terminal_error < l2_norm(run.defects.back()));
}

TEST_CASE("the semilinear solve contracts and keeps the terminal identity") {
  const ProblemConfig cfg = semilinear_config();
  const SolveResult run = fixed_point_solve(cfg);
  CHECK(run.converged);
  CHECK(run.iterations <= 60);
  REQUIRE(run.residual_history.size() >= 3);
  for (size_t k = 2; k < run.residual_history.size(); ++k)
    CHECK(run.residual_history[k] <= run.residual_history[k - 1]);
  CHECK(run.residual_history.back() <= cfg.fp_tol);

  REQUIRE(run.z.size() == 2);
  const SpectralField xT = run.trajectory.value(run.trajectory.size() - 1);
  CHECK(l2_norm(xT - cfg.target + run.z.back()) <= 1e-8);

  // Applying the map once more moves the fixed point by at most the solve
  // tolerance scale.
  const auto out = apply_phi(run.trajectory, cfg, *run.table, run.b_op, run.gramians);
  CHECK(trajectory_sup_distance(out, run.trajectory) <= 10.0 * cfg.fp_tol);
}

TEST_CASE("an exhausted iteration budget reports instead of throwing") {
  ProblemConfig cfg = semilinear_config();
  cfg.fp_max_iters = 1;
  const SolveResult run = fixed_point_solve(cfg);
  CHECK_FALSE(run.converged);
  CHECK(run.iterations == 1);
  CHECK(run.residual_history.size() == 1);
  CHECK(run.residual_history[0] > cfg.fp_tol);
}

TEST_CASE("assembled control vanishes on impulse intervals and at handoffs") {
  const ProblemConfig cfg = semilinear_config();
  const SolveResult run = fixed_point_solve(cfg);
  REQUIRE(run.converged);
  for (double t : {0.31, 0.4, 0.5})
    CHECK(l2_norm(control_at(run, cfg, t)) == 0.0);
  // s(e, e) = 0 kills the control at each interval's right endpoint.
  CHECK(l2_norm(control_at(run, cfg, 0.3)) == 0.0);
  CHECK(l2_norm(control_at(run, cfg, 1.0)) == 0.0);
  CHECK(l2_norm(control_at(run, cfg, 0.15)) > 0.0);
  CHECK(l2_norm(control_at(run, cfg, 0.8)) > 0.0);
  CHECK_THROWS_AS(control_at(run, cfg, -0.5), std::domain_error);
  CHECK_THROWS_AS(control_at(run, cfg, 1.5), std::domain_error);
}

TEST_CASE("verification accepts the converged semilinear run") {
  const ProblemConfig cfg = semilinear_config();
  const SolveResult run = fixed_point_solve(cfg);
  REQUIRE(run.converged);
  const MildResidualReport rep = verify_mild_solution(run, cfg);
  CHECK(rep.sup() <= 1e-9);
  CHECK(rep.branch_impulse == 0.0);
  CHECK(rep.interface_max <= 1e-12);
  CHECK(rep.control_support == 0.0);
  CHECK(rep.initial_identity <= 1e-12);
}

TEST_CASE("verification flags a corrupted trajectory node") {
  const ProblemConfig cfg = linear_config(3);
  SolveResult run = fixed_point_solve(cfg);
  REQUIRE(run.converged);
  CHECK(verify_mild_solution(run, cfg).sup() <= 1e-9);
  // Bump one interior sample by an l2 mass of 0.1.
  SpectralField& v = run.trajectory.mutable_value(run.trajectory.zero_index() + 617);
  v.coeff(0) += Complex(0.1 * std::sqrt(2.0 * std::numbers::pi), 0.0);
  const MildResidualReport rep = verify_mild_solution(run, cfg);
  CHECK(rep.sup() >= 0.09);
}

TEST_CASE("sup distance accounts for stored right limits") {
  const ProblemConfig cfg = linear_config(2);
  const EvolutionTable table(cfg.basis, cfg.advection, cfg.horizon, cfg.dt);
  PiecewiseTrajectory a = free_trajectory(cfg, table);
  PiecewiseTrajectory b = a;
  CHECK(trajectory_sup_distance(a, b) == 0.0);
  SpectralField jump = a.value(500);
  jump.coeff(0) += Complex(1.0, 0.0);
  a.set_right_limit(500, jump);
  CHECK(trajectory_sup_distance(a, b) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-12));
  const ProblemConfig other = linear_config(3);
  const EvolutionTable t2(other.basis, other.advection, other.horizon, other.dt);
  const PiecewiseTrajectory c = free_trajectory(other, t2);
  CHECK_THROWS_AS(trajectory_sup_distance(a, c), std::invalid_argument);
}

TEST_CASE("feasibility arithmetic reproduces hand constants exactly") {
  const FeasibilityReport r1 = feasibility_value(1.0, 1.0, 1.0, 0.2, 0.0, 1.0, 1.0);
  CHECK(r1.k == 0.2);
  CHECK(r1.value == 0.4);
  CHECK(r1.feasible);
  const FeasibilityReport r2 = feasibility_value(1.0, 1.0, 1.0, 0.2, 0.0, 1.0, 0.1);
  CHECK(r2.k == 0.2);
  CHECK(r2.value == 2.2);
  CHECK_FALSE(r2.feasible);
  const FeasibilityReport r3 = feasibility_value(2.0, 3.0, 0.7, 0.0, 0.0, 5.0, 0.01);
  CHECK(r3.value == 0.0);
  CHECK(r3.feasible);
}

TEST_CASE("the contraction predictor needs the nonlocal bound constants") {
  ProblemConfig cfg = linear_config(2);
  const EvolutionTable table(cfg.basis, cfg.advection, cfg.horizon, cfg.dt);
  const ControlOperator b = build_control_operator(cfg.kernel, cfg.basis);
  CHECK_THROWS_AS(feasibility_check(cfg, table, b), std::invalid_argument);
  cfg.bound_m_g = 0.05;
  cfg.bound_m_h = 0.0;
  cfg.lambda = 1.0; // weak regularization keeps the product below one
  const FeasibilityReport rep = feasibility_check(cfg, table, b);
  CHECK(rep.m == table.bound_m());
  CHECK(rep.m_tilde == table.bound_m_tilde());
  CHECK(rep.m_b == 1.0);
  CHECK(rep.value > 0.0);
  CHECK(rep.feasible);
}
