#include "wavectrl/gramian.hpp"

#include <cmath>

#include "wavectrl/quadrature.hpp"

namespace wavectrl {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// Closed trapezoid weights on the spatial grid extended to 2pi.
std::vector<double> spatial_weights(int grid_size) {
  const double h = kTwoPi / grid_size;
  std::vector<double> w(static_cast<size_t>(grid_size) + 1, h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

ControlOperator from_kernel_samples(const Eigen::MatrixXd& samples,
                                    const ModeBasis& basis, std::string name) {
  const int M = basis.grid_size;
  if (samples.rows() != M + 1 || samples.cols() != M + 1)
    throw std::invalid_argument("kernel samples must cover the closed spatial grid");
  const double scale = std::max(1.0, samples.cwiseAbs().maxCoeff());
  if ((samples - samples.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("kernel is not symmetric");

  const int N = basis.n_modes;
  const int dim = 2 * N + 1;
  const auto w = spatial_weights(M);
  // e^{i n xi_k} for n >= 0; negative modes use the exact conjugate.
  Eigen::MatrixXcd ph(N + 1, M + 1);
  for (int n = 0; n <= N; ++n)
    for (int k = 0; k <= M; ++k)
      ph(n, k) = std::polar(1.0, n * (kTwoPi * k / M));
  const auto phase = [&](int n, int k) {
    return n >= 0 ? ph(n, k) : std::conj(ph(-n, k));
  };

  // g(n, j) = sum_k w_k K(zeta_k, xi_j) e^{i n zeta_k}
  Eigen::MatrixXcd g(dim, M + 1);
  for (int n = -N; n <= N; ++n)
    for (int j = 0; j <= M; ++j) {
      Complex acc = 0.0;
      for (int k = 0; k <= M; ++k) acc += w[k] * samples(k, j) * phase(n, k);
      g(n + N, j) = acc;
    }

  ControlOperator op;
  op.kernel = std::move(name);
  op.mat.resize(dim, dim);
  for (int m = -N; m <= N; ++m)
    for (int n = -N; n <= N; ++n) {
      Complex acc = 0.0;
      for (int j = 0; j <= M; ++j) acc += w[j] * std::conj(phase(m, j)) * g(n + N, j);
      op.mat(m + N, n + N) = acc / kTwoPi;
    }
  op.norm = op.mat.jacobiSvd().singularValues()(0);
  op.real_preserving = true; // real kernel
  return op;
}

bool mirror_symmetric(const Eigen::MatrixXcd& m, int N) {
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (int a = -N; a <= N; ++a)
    for (int b = -N; b <= N; ++b)
      if (std::abs(m(N - a, N - b) - std::conj(m(N + a, N + b))) > 1e-12 * scale)
        return false;
  return true;
}

// Accumulate sum_j w_j diag(s_j) BB* diag(conj s_j) with s_j supplied per node.
Gramian accumulate_gramian(const EvolutionTable& table, const ControlOperator& B,
                           double a, double b, const std::vector<double>& weights,
                           const std::vector<Eigen::VectorXcd>& svecs) {
  const int N = table.basis().n_modes;
  const int dim = 2 * N + 1;
  Gramian out;
  out.a = a;
  out.b = b;
  out.nodes = static_cast<int>(weights.size()) - 1;
  const Eigen::MatrixXcd bbs = B.mat * B.mat.adjoint();
  out.psi = Eigen::MatrixXcd::Zero(dim, dim);
  for (size_t j = 0; j < weights.size(); ++j) {
    const auto& s = svecs[j];
    for (int m = 0; m < dim; ++m)
      for (int n = 0; n < dim; ++n)
        out.psi(m, n) += weights[j] * s(m) * bbs(m, n) * std::conj(s(n));
  }
  out.psi = (0.5 * (out.psi + out.psi.adjoint())).eval();
  out.real_preserving = B.real_preserving && mirror_symmetric(out.psi, N);
  return out;
}

Eigen::VectorXcd sine_row(const EvolutionTable& table, int jb, int j) {
  const int N = table.basis().n_modes;
  Eigen::VectorXcd s(2 * N + 1);
  for (int n = 0; n <= N; ++n) {
    const Complex v = table.pair_indices(n, jb, j).s;
    s(N + n) = v;
    if (n > 0) s(N - n) = std::conj(v);
  }
  return s;
}

} // namespace

ControlOperator build_control_operator(const KernelDescriptor& desc,
                                       const ModeBasis& basis) {
  const int N = basis.n_modes;
  switch (desc.kind) {
    case KernelDescriptor::Kind::ModeDiagonal: {
      std::vector<double> gains = desc.gains;
      if (gains.size() == 1) gains.assign(static_cast<size_t>(N) + 1, gains[0]);
      if (gains.size() != static_cast<size_t>(N) + 1)
        throw std::invalid_argument("mode_diagonal needs 1 or N+1 gains");
      ControlOperator op;
      op.kernel = "mode_diagonal";
      op.mat = Eigen::MatrixXcd::Zero(2 * N + 1, 2 * N + 1);
      double norm = 0.0;
      for (int n = -N; n <= N; ++n) {
        const double k = gains[static_cast<size_t>(std::abs(n))];
        if (k == 0.0) throw std::invalid_argument("mode_diagonal gains must be nonzero");
        op.mat(n + N, n + N) = k;
        norm = std::max(norm, std::abs(k));
      }
      op.norm = norm;
      op.real_preserving = true;
      return op;
    }
    case KernelDescriptor::Kind::Quadratic: {
      const int M = basis.grid_size;
      Eigen::MatrixXd samples(M + 1, M + 1);
      for (int j = 0; j <= M; ++j)
        for (int k = 0; k <= M; ++k) {
          const double xi = kTwoPi * j / M, zeta = kTwoPi * k / M;
          samples(j, k) = 1.0 + xi * xi + zeta * zeta;
        }
      return from_kernel_samples(samples, basis, "quadratic");
    }
    case KernelDescriptor::Kind::Tabulated:
      return from_kernel_samples(desc.samples, basis, "tabulated");
  }
  throw std::invalid_argument("unknown kernel descriptor");
}

Gramian assemble_gramian(const EvolutionTable& table, const ControlOperator& B,
                         double a, double b, int nodes) {
  if (nodes < 8 || nodes % 2 != 0)
    throw std::invalid_argument("Gramian quadrature needs an even cell count >= 8");
  if (a < -1e-9 || b > table.horizon() + 1e-9 || a > b + 1e-12)
    throw std::invalid_argument("Gramian interval outside [0, T]");
  const int dim = 2 * table.basis().n_modes + 1;
  if (b - a <= 1e-12) {
    Gramian out;
    out.a = a;
    out.b = b;
    out.nodes = 0;
    out.psi = Eigen::MatrixXcd::Zero(dim, dim);
    out.degenerate = true;
    return out;
  }
  const double h = (b - a) / nodes;
  const auto weights = simpson_weights(nodes, h);
  std::vector<Eigen::VectorXcd> svecs(weights.size());
  const int N = table.basis().n_modes;
  for (int j = 0; j <= nodes; ++j) {
    const double t = (j == nodes) ? b : a + j * h;
    Eigen::VectorXcd s(dim);
    for (int n = 0; n <= N; ++n) {
      const Complex v = table.pair(n, b, t).s;
      s(N + n) = v;
      if (n > 0) s(N - n) = std::conj(v);
    }
    svecs[static_cast<size_t>(j)] = std::move(s);
  }
  return accumulate_gramian(table, B, a, b, weights, svecs);
}

Gramian gramian_on_grid(const EvolutionTable& table, const ControlOperator& B,
                        const std::vector<int>& cuts) {
  if (cuts.size() < 2)
    throw std::invalid_argument("gramian_on_grid needs at least the interval endpoints");
  if (cuts.front() < 0 || cuts.back() > table.cells())
    throw std::invalid_argument("gramian_on_grid cuts outside the table grid");
  const int ja = cuts.front(), jb = cuts.back();
  if (ja == jb) {
    Gramian out;
    out.a = out.b = ja * table.dt();
    out.nodes = 0;
    out.psi = Eigen::MatrixXcd::Zero(2 * table.basis().n_modes + 1,
                                     2 * table.basis().n_modes + 1);
    out.degenerate = true;
    return out;
  }
  const auto weights = merged_weights(cuts, table.dt());
  std::vector<Eigen::VectorXcd> svecs(weights.size());
  for (int j = ja; j <= jb; ++j) svecs[j - ja] = sine_row(table, jb, j);
  return accumulate_gramian(table, B, ja * table.dt(), jb * table.dt(), weights, svecs);
}

SpectralField resolvent_solve(double lambda, const Gramian& psi, const SpectralField& y,
                              double p, const ModeBasis& basis, double tol,
                              int max_iters) {
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  if (p < 2.0) throw std::invalid_argument("unsupported duality exponent p < 2");
  const int dim = 2 * basis.n_modes + 1;
  if (psi.psi.rows() != dim || y.c.size() != dim)
    throw std::invalid_argument("Gramian/field dimension mismatch");

  if (p == 2.0) {
    Eigen::MatrixXcd a = psi.psi;
    a.diagonal().array() += lambda;
    SpectralField z = y;
    z.c = a.ldlt().solve((lambda * y.c).eval());
    z.real_field = y.real_field && psi.real_preserving;
    if (z.real_field) symmetrize_real(z);
    return z;
  }

  if (!y.real_field || !psi.real_preserving)
    throw std::invalid_argument("p > 2 resolvent needs a real field and Gramian");
  SpectralField z = y;
  const double alpha = 0.5;
  double res = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const SpectralField jz = duality_map(z, p, basis);
    const Eigen::VectorXcd r = lambda * z.c + psi.psi * jz.c - lambda * y.c;
    res = std::sqrt(r.squaredNorm() / kTwoPi);
    if (res <= tol) return z;
    z.c -= (alpha / lambda) * r;
    symmetrize_real(z);
  }
  throw IterationFailure(res, max_iters);
}

SpectralField control_eval(double t, const SpectralField& defect,
                           const EvolutionTable& table, const ControlOperator& B,
                           const Gramian& psi, double lambda, double p) {
  if (t < psi.a - 1e-9 || t > psi.b + 1e-9)
    throw std::domain_error("control time outside the Gramian interval");
  const ModeBasis& basis = table.basis();
  const SpectralField z = resolvent_solve(lambda, psi, defect, p, basis);
  const SpectralField jz = duality_map(z, p, basis);
  const int N = basis.n_modes;
  Eigen::VectorXcd v(2 * N + 1);
  for (int n = 0; n <= N; ++n) {
    const Complex s = table.pair(n, psi.b, t).s;
    v(N + n) = std::conj(s) * jz.c(N + n) / lambda;
    if (n > 0) v(N - n) = s * jz.c(N - n) / lambda;
  }
  SpectralField u = SpectralField::zero(basis, false);
  u.c = B.mat.adjoint() * v;
  if (defect.real_field && psi.real_preserving && B.real_preserving)
    symmetrize_real(u);
  return u;
}

LinearControlRun linear_feedback_control(const SpectralField& v, const SpectralField& w,
                                         const SpectralField& x_T,
                                         const EvolutionTable& table,
                                         const ControlOperator& B, double lambda,
                                         double p) {
  const ModeBasis& basis = table.basis();
  const int N = basis.n_modes;
  const int cells = table.cells();
  const double T = table.horizon();

  LinearControlRun run;
  run.psi = gramian_on_grid(table, B, {0, cells});
  run.defect = x_T - apply_C(table, T, 0.0, v) - apply_S(table, T, 0.0, w);
  run.z = resolvent_solve(lambda, run.psi, run.defect, p, basis);
  const SpectralField jz = duality_map(run.z, p, basis);

  const bool real_run = run.defect.real_field && run.z.real_field &&
                        B.real_preserving && v.real_field && w.real_field;

  // Control samples u(t_j) = B* diag(conj s_n(T, t_j)) J[z]/lambda.
  std::vector<Eigen::VectorXcd> srow(static_cast<size_t>(cells) + 1);
  for (int j = 0; j <= cells; ++j) srow[j] = sine_row(table, cells, j);
  run.control.reserve(cells + 1);
  std::vector<Eigen::VectorXcd> bu(static_cast<size_t>(cells) + 1);
  for (int j = 0; j <= cells; ++j) {
    Eigen::VectorXcd arg(2 * N + 1);
    for (int i = 0; i < 2 * N + 1; ++i)
      arg(i) = std::conj(srow[j](i)) * jz.c(i) / lambda;
    SpectralField u = SpectralField::zero(basis, false);
    u.c = B.mat.adjoint() * arg;
    if (real_run) symmetrize_real(u);
    run.control.push_back(u);
    bu[j] = B.mat * u.c;
  }

  // Variation of constants per mode: state row of Phi(t)[(v,w) + Q(t)],
  // Q(t) = int_0^t Phi(s)^{-1} (0, Bu(s)) ds, cumulative blocked prefix.
  const std::vector<int> cuts{0, cells};
  run.state.assign(static_cast<size_t>(cells) + 1, SpectralField::zero(basis, real_run));
  for (int n = -N; n <= N; ++n) {
    std::vector<Complex> i01(cells + 1), i11(cells + 1);
    for (int j = 0; j <= cells; ++j) {
      const Eigen::Matrix2cd inv = table.node_inverse(n, j);
      i01[j] = inv(0, 1);
      i11[j] = inv(1, 1);
    }
    const auto q0 = blocked_prefix<Complex>(
        cuts, table.dt(), [&](int j, Side) { return i01[j] * bu[j](n + N); });
    const auto q1 = blocked_prefix<Complex>(
        cuts, table.dt(), [&](int j, Side) { return i11[j] * bu[j](n + N); });
    for (int j = 0; j <= cells; ++j) {
      const Eigen::Matrix2cd f = table.node_matrix(n, j);
      run.state[j].coeff(n) =
          f(0, 0) * (v.coeff(n) + q0[j]) + f(0, 1) * (w.coeff(n) + q1[j]);
    }
  }
  if (real_run)
    for (auto& st : run.state) symmetrize_real(st);

  run.terminal_error = l2_norm(run.state.back() - x_T);
  run.predicted_error = l2_norm(run.z);
  return run;
}

CertificateReport controllability_certificate(const Gramian& psi) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(psi.psi);
  CertificateReport rep;
  const auto& vals = eig.eigenvalues();
  rep.min_eigenvalue = vals.minCoeff();
  rep.max_eigenvalue = vals.maxCoeff();
  const double thr = 1e-10 * std::max(rep.max_eigenvalue, 0.0);
  std::vector<int> null_idx;
  for (int i = 0; i < vals.size(); ++i)
    if (vals(i) <= thr) null_idx.push_back(i);
  rep.positive_definite = null_idx.empty() && rep.min_eigenvalue > 0.0;
  if (!null_idx.empty()) {
    rep.null_basis.resize(psi.psi.rows(), static_cast<Eigen::Index>(null_idx.size()));
    for (size_t k = 0; k < null_idx.size(); ++k)
      rep.null_basis.col(static_cast<Eigen::Index>(k)) = eig.eigenvectors().col(null_idx[k]);
  }
  return rep;
}

} // namespace wavectrl
