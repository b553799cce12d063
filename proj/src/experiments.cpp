#include "wavectrl/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wavectrl/mild_solver.hpp"

namespace wavectrl {

namespace {

namespace fs = std::filesystem;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt12(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

// 0 on success, 4 on any filesystem or stream failure.
int write_text(const fs::path& path, const std::string& content, std::ostream& log) {
  std::ofstream out(path);
  if (!out) {
    log << "cannot open " << path.string() << " for writing\n";
    return 4;
  }
  out << content;
  out.flush();
  if (!out) {
    log << "write failed for " << path.string() << "\n";
    return 4;
  }
  log << "wrote " << path.string() << "\n";
  return 0;
}

int prepare_out_dir(const ExperimentSpec& spec, std::ostream& log) {
  std::error_code ec;
  fs::create_directories(spec.out_dir.empty() ? "." : spec.out_dir, ec);
  if (ec) {
    log << "cannot create output directory " << spec.out_dir << ": " << ec.message() << "\n";
    return 4;
  }
  return write_text(fs::path(spec.out_dir) / "effective_config.cfg", spec.echo, log);
}

double min_gramian_eig(const std::vector<Gramian>& gs) {
  double out = std::numeric_limits<double>::infinity();
  for (const Gramian& g : gs)
    out = std::min(out, controllability_certificate(g).min_eigenvalue);
  return gs.empty() ? 0.0 : out;
}

std::string grid_csv_header(const char* first, int m) {
  std::string h = first;
  for (int k = 0; k < m; ++k) h += ",x" + std::to_string(k);
  return h + "\n";
}

void append_grid_row(std::string& csv, double t, const Eigen::VectorXd& vals) {
  csv += fmt17(t);
  for (int k = 0; k < vals.size(); ++k) {
    csv += ",";
    csv += fmt17(vals[k]);
  }
  csv += "\n";
}

} // namespace

std::string run_csv(const std::vector<RunRecord>& rows) {
  std::string out =
      "lambda,n_modes,terminal_error,iterations,residual,feasibility_value,"
      "gramian_min_eig,wall_ms,error\n";
  for (const RunRecord& r : rows) {
    out += fmt17(r.lambda);
    out += "," + std::to_string(r.n_modes);
    out += "," + fmt17(r.terminal_error);
    out += "," + std::to_string(r.iterations);
    out += "," + fmt17(r.residual);
    out += "," + fmt17(r.feasibility_value);
    out += "," + fmt17(r.gramian_min_eig);
    out += "," + fmt17(r.wall_ms);
    out += "," + sanitize(r.error);
    out += "\n";
  }
  return out;
}

RunRecord run_problem_row(const ExperimentSpec& spec, int n_modes, double lambda,
                          int threads) {
  RunRecord rec;
  rec.lambda = lambda;
  rec.n_modes = n_modes;
  try {
    ProblemConfig cfg = materialize(spec, n_modes);
    cfg.lambda = lambda;
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult run = fixed_point_solve(cfg, threads);
    const auto t1 = std::chrono::steady_clock::now();
    rec.wall_ms = spec.deterministic_timing
                      ? 0.0
                      : std::chrono::duration<double, std::milli>(t1 - t0).count();
    rec.terminal_error = run.terminal_error;
    rec.iterations = run.iterations;
    rec.residual = run.residual_history.empty() ? 0.0 : run.residual_history.back();
    for (const SpectralField& d : run.defects) rec.defect_norms.push_back(l2_norm(d));
    rec.feasibility_value =
        feasibility_value(run.table->bound_m(), run.table->bound_m_tilde(), run.b_op.norm,
                          cfg.bound_m_g, cfg.bound_m_h, cfg.horizon, lambda)
            .value;
    rec.gramian_min_eig = min_gramian_eig(run.gramians);
    if (!run.converged)
      rec.error = "fixed point stalled at residual " + fmt17(rec.residual) + " after " +
                  std::to_string(rec.iterations) + " iterations";
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

int run_lambda_sweep(const ExperimentSpec& spec, int threads, std::ostream& log) {
  if (int rc = prepare_out_dir(spec, log)) return rc;
  std::vector<RunRecord> rows;
  for (double lambda : spec.lambdas)
    rows.push_back(run_problem_row(spec, spec.n_modes, lambda, threads));
  return write_text(fs::path(spec.out_dir) / "sweep.csv", run_csv(rows), log);
}

int run_mode_refinement(const ExperimentSpec& spec, int threads, std::ostream& log) {
  if (int rc = prepare_out_dir(spec, log)) return rc;
  std::vector<RunRecord> rows;
  for (int n : spec.n_list) rows.push_back(run_problem_row(spec, n, spec.lambda, threads));
  return write_text(fs::path(spec.out_dir) / "refinement.csv", run_csv(rows), log);
}

int run_certificate(const ExperimentSpec& spec, int threads, std::ostream& log) {
  if (int rc = prepare_out_dir(spec, log)) return rc;
  const ProblemConfig cfg = materialize(spec, spec.n_modes);
  const EvolutionTable table(cfg.basis, cfg.advection, cfg.horizon, cfg.dt, threads);
  const ControlOperator B = build_control_operator(cfg.kernel, cfg.basis);
  const std::vector<Gramian> gramians = interval_gramians(cfg, table, B);

  std::ostringstream o;
  o << "control kernel: " << B.kernel << "\n";
  o << "modes: " << cfg.basis.n_modes << "  intervals: " << gramians.size() << "\n\n";
  for (size_t i = 0; i < gramians.size(); ++i) {
    const Gramian& g = gramians[i];
    o << "interval " << i << ": [" << fmt12(g.a) << ", " << fmt12(g.b) << "]";
    if (g.degenerate) {
      o << "  zero-length window, zero Gramian\n";
      continue;
    }
    const CertificateReport cert = controllability_certificate(g);
    o << "  min_eig = " << fmt12(cert.min_eigenvalue)
      << "  max_eig = " << fmt12(cert.max_eigenvalue)
      << (cert.positive_definite ? "  positive definite\n" : "  rank deficient\n");
    const int N = cfg.basis.n_modes;
    for (int col = 0; col < cert.null_basis.cols(); ++col) {
      o << "  null vector " << col << ":";
      const auto v = cert.null_basis.col(col);
      double vmax = 0.0;
      for (int k = 0; k < v.size(); ++k) vmax = std::max(vmax, std::abs(v[k]));
      for (int k = 0; k < v.size(); ++k)
        if (std::abs(v[k]) >= 0.1 * vmax)
          o << " mode " << (k - N) << " (" << fmt12(std::abs(v[k])) << ")";
      o << "\n";
    }
  }
  o << "\nfeasibility (contraction requires value < 1):\n";
  for (double lambda : spec.lambdas) {
    const FeasibilityReport rep =
        feasibility_value(table.bound_m(), table.bound_m_tilde(), B.norm, cfg.bound_m_g,
                          cfg.bound_m_h, cfg.horizon, lambda);
    o << "lambda = " << fmt12(lambda) << ": value = " << fmt12(rep.value)
      << (rep.feasible ? "  feasible\n" : "  not feasible\n");
  }
  return write_text(fs::path(spec.out_dir) / "certificate.txt", o.str(), log);
}

int run_single(const ExperimentSpec& spec, int threads, std::ostream& log) {
  if (int rc = prepare_out_dir(spec, log)) return rc;
  const ProblemConfig cfg = materialize(spec, spec.n_modes);

  std::ostringstream diag;
  int code = 0;
  bool have_run = false;
  SolveResult run;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    run = fixed_point_solve(cfg, threads);
    have_run = true;
  } catch (const std::exception& e) {
    diag << "solver error: " << e.what() << "\n";
    code = 3;
  }
  const auto t1 = std::chrono::steady_clock::now();
  if (!spec.deterministic_timing)
    diag << "wall_ms = "
         << fmt12(std::chrono::duration<double, std::milli>(t1 - t0).count()) << "\n";

  if (have_run) {
    diag << "converged = " << (run.converged ? "true" : "false") << "\n";
    diag << "iterations = " << run.iterations << "\n";
    diag << "residual_history =";
    for (double r : run.residual_history) diag << " " << fmt12(r);
    diag << "\n";
    diag << "terminal_error = " << fmt17(run.terminal_error) << "\n";
    diag << "predicted_error = " << fmt17(run.predicted_error) << "\n";
    for (size_t i = 0; i < run.defects.size(); ++i)
      diag << "defect_norm[" << i << "] = " << fmt17(l2_norm(run.defects[i])) << "\n";
    for (size_t i = 0; i < run.gramians.size(); ++i)
      diag << "gramian_min_eig[" << i << "] = "
           << fmt17(controllability_certificate(run.gramians[i]).min_eigenvalue) << "\n";
    const FeasibilityReport rep = feasibility_check(cfg, *run.table, run.b_op);
    diag << "feasibility_value = " << fmt17(rep.value) << " feasible = "
         << (rep.feasible ? "true" : "false") << "\n";

    if (run.converged) {
      const MildResidualReport ver = verify_mild_solution(run, cfg, threads);
      diag << "verify_branch_initial = " << fmt17(ver.branch_initial) << "\n";
      diag << "verify_branch_impulse = " << fmt17(ver.branch_impulse) << "\n";
      diag << "verify_branch_post = " << fmt17(ver.branch_post) << "\n";
      diag << "verify_interface_max = " << fmt17(ver.interface_max) << "\n";
      diag << "verify_initial_identity = " << fmt17(ver.initial_identity) << "\n";
      diag << "verify_control_support = " << fmt17(ver.control_support) << "\n";
      diag << "verify_sup = " << fmt17(ver.sup()) << "\n";
    } else {
      diag << "verify skipped: solver did not converge\n";
      code = 3;
    }

    const PiecewiseTrajectory& x = run.trajectory;
    std::string traj_csv = grid_csv_header("t", cfg.basis.grid_size);
    for (int j = 0; j < x.size(); ++j)
      append_grid_row(traj_csv, x.time_of(j), evaluate_on_grid(x.value(j), cfg.basis));
    if (int rc = write_text(fs::path(spec.out_dir) / "trajectory.csv", traj_csv, log))
      return rc;

    std::string ctrl_csv = grid_csv_header("t", cfg.basis.grid_size);
    for (int j = 0; j <= cfg.cells(); ++j) {
      const double t = j * cfg.dt;
      append_grid_row(ctrl_csv, t, evaluate_on_grid(control_at(run, cfg, t), cfg.basis));
    }
    if (int rc = write_text(fs::path(spec.out_dir) / "control.csv", ctrl_csv, log))
      return rc;
  }

  if (int rc = write_text(fs::path(spec.out_dir) / "diagnostics.txt", diag.str(), log))
    return rc;
  return code;
}

int run_axiom_check(const ExperimentSpec& spec, int threads, std::ostream& log) {
  if (int rc = prepare_out_dir(spec, log)) return rc;
  const ProblemConfig cfg = materialize(spec, spec.n_modes);
  const EvolutionTable table(cfg.basis, cfg.advection, cfg.horizon, cfg.dt, threads);
  const AxiomReport rep = check_evolution_axioms(table, spec.axiom_eps);
  std::ostringstream o;
  o << "modes = " << cfg.basis.n_modes << " dt = " << fmt12(cfg.dt)
    << " eps = " << fmt12(spec.axiom_eps) << "\n";
  o << "identity_residual = " << fmt17(rep.identity) << "\n";
  o << "derivative_forward = " << fmt17(rep.derivative_fwd) << "\n";
  o << "derivative_backward = " << fmt17(rep.derivative_bwd) << "\n";
  o << "ode_residual = " << fmt17(rep.ode) << "\n";
  o << "lipschitz = " << fmt17(rep.lipschitz) << "\n";
  o << "bound_m = " << fmt17(rep.bound_m) << "\n";
  o << "bound_m_tilde = " << fmt17(rep.bound_m_tilde) << "\n";
  return write_text(fs::path(spec.out_dir) / "axioms.txt", o.str(), log);
}

int run_experiment(const ExperimentSpec& spec, int threads, std::ostream& log) {
  switch (spec.kind) {
    case ExperimentSpec::Kind::LambdaSweep: return run_lambda_sweep(spec, threads, log);
    case ExperimentSpec::Kind::ModeRefinement:
      return run_mode_refinement(spec, threads, log);
    case ExperimentSpec::Kind::Certificate: return run_certificate(spec, threads, log);
    case ExperimentSpec::Kind::SingleRun: return run_single(spec, threads, log);
    case ExperimentSpec::Kind::AxiomCheck: return run_axiom_check(spec, threads, log);
  }
  return 2;
}

} // namespace wavectrl
