#include "wavectrl/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace wavectrl {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(trim(s.substr(start)));
      break;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& v, int line, const std::string& key) {
  const std::string t = trim(v);
  if (t.empty()) throw ConfigError(line, key, "expected a number");
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(x))
    throw ConfigError(line, key, "malformed number '" + t + "'");
  return x;
}

long to_long(const std::string& v, int line, const std::string& key) {
  const std::string t = trim(v);
  if (t.empty()) throw ConfigError(line, key, "expected an integer");
  char* end = nullptr;
  const long x = std::strtol(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size())
    throw ConfigError(line, key, "malformed integer '" + t + "'");
  return x;
}

int to_int(const std::string& v, int line, const std::string& key) {
  return static_cast<int>(to_long(v, line, key));
}

bool to_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(line, key, "expected true or false");
}

std::vector<double> to_double_list(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  for (const std::string& tok : split(v, ',')) out.push_back(to_double(tok, line, key));
  return out;
}

std::vector<int> to_int_list(const std::string& v, int line, const std::string& key) {
  std::vector<int> out;
  for (const std::string& tok : split(v, ',')) out.push_back(to_int(tok, line, key));
  return out;
}

FieldSpec to_field(const std::string& v, int line, const std::string& key) {
  FieldSpec out;
  for (const std::string& tok : split(v, ',')) {
    const size_t pos = tok.find_last_of("cs");
    if (pos == std::string::npos || pos == 0 || pos + 1 == tok.size())
      throw ConfigError(line, key,
                        "malformed field term '" + tok + "' (want <amp>c<n> or <amp>s<n>)");
    FieldTerm term;
    term.amp = to_double(tok.substr(0, pos), line, key);
    term.sine = tok[pos] == 's';
    term.mode = to_int(tok.substr(pos + 1), line, key);
    if (term.mode < 0) throw ConfigError(line, key, "field term mode must be >= 0");
    if (term.sine && term.mode == 0)
      throw ConfigError(line, key, "sin(0 xi) is identically zero");
    out.push_back(term);
  }
  return out;
}

Coefficient to_coefficient(const std::string& v, int line, const std::string& key,
                           std::string& token_out) {
  const std::vector<std::string> parts = split(v, ':');
  try {
    if (parts[0] == "constant" && parts.size() == 2) {
      const double a = to_double(parts[1], line, key);
      token_out = "constant:" + fmt17(a);
      return Coefficient::constant(a);
    }
    if ((parts[0] == "cosine" || parts[0] == "sine") && parts.size() == 3) {
      const double a = to_double(parts[1], line, key);
      const double w = to_double(parts[2], line, key);
      token_out = parts[0] + ":" + fmt17(a) + ":" + fmt17(w);
      return parts[0] == "cosine" ? Coefficient::cosine(a, w) : Coefficient::sine(a, w);
    }
    if (parts[0] == "table" && parts.size() == 2) {
      std::ifstream in(parts[1]);
      if (!in) throw ConfigError(line, key, "cannot open table file '" + parts[1] + "'");
      std::vector<double> ts, vs;
      double t, val;
      while (in >> t >> val) {
        ts.push_back(t);
        vs.push_back(val);
      }
      token_out = "table:" + parts[1];
      return Coefficient::tabulated(std::move(ts), std::move(vs));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(line, key, e.what());
  }
  throw ConfigError(line, key, "unknown coefficient shape '" + v +
                                   "' (want constant:a, cosine:a:w, sine:a:w, table:path)");
}

KernelDescriptor to_kernel(const std::string& v, int line, const std::string& key,
                           std::string& token_out) {
  KernelDescriptor desc;
  const std::vector<std::string> parts = split(v, ':');
  if (parts[0] == "mode_diagonal" && parts.size() == 1) {
    desc.kind = KernelDescriptor::Kind::ModeDiagonal;
    token_out = "mode_diagonal";
    return desc;
  }
  if (parts[0] == "quadratic" && parts.size() == 1) {
    desc.kind = KernelDescriptor::Kind::Quadratic;
    token_out = "quadratic";
    return desc;
  }
  if (parts[0] == "table" && parts.size() == 2) {
    std::ifstream in(parts[1]);
    if (!in) throw ConfigError(line, key, "cannot open kernel file '" + parts[1] + "'");
    std::vector<double> flat;
    double x;
    while (in >> x) flat.push_back(x);
    const int m = static_cast<int>(std::llround(std::sqrt(double(flat.size()))));
    if (m < 2 || static_cast<size_t>(m) * m != flat.size())
      throw ConfigError(line, key, "kernel file is not a square sample matrix");
    desc.kind = KernelDescriptor::Kind::Tabulated;
    desc.samples.resize(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) desc.samples(i, j) = flat[static_cast<size_t>(i) * m + j];
    token_out = "table:" + parts[1];
    return desc;
  }
  throw ConfigError(line, key, "unknown control kernel '" + v +
                                   "' (want mode_diagonal, quadratic, table:path)");
}

std::vector<WaveInstance::ImpulseKernel> to_impulse_kernels(const std::string& v, int line,
                                                            const std::string& key) {
  std::vector<WaveInstance::ImpulseKernel> out;
  for (const std::string& tok : split(v, ',')) {
    const std::vector<std::string> parts = split(tok, ':');
    WaveInstance::ImpulseKernel k;
    if (parts[0] == "cosine_decay")
      k.family = WaveInstance::ImpulseKernel::Family::CosineDecay;
    else if (parts[0] == "flat")
      k.family = WaveInstance::ImpulseKernel::Family::Flat;
    else
      throw ConfigError(line, key, "unknown impulse kernel family '" + parts[0] + "'");
    if (parts.size() == 2)
      k.gain = to_double(parts[1], line, key);
    else if (parts.size() > 2)
      throw ConfigError(line, key, "malformed impulse kernel '" + tok + "'");
    out.push_back(k);
  }
  return out;
}

TimeProfile to_profile(const std::string& v, int line, const std::string& key) {
  const std::vector<std::string> parts = split(v, ':');
  TimeProfile prof;
  if (parts[0] == "constant" && parts.size() == 1) return prof;
  if (parts[0] == "exp" && parts.size() == 2) {
    prof.kind = TimeProfile::Kind::Exp;
    prof.rate = to_double(parts[1], line, key);
    return prof;
  }
  throw ConfigError(line, key, "unknown time profile '" + v + "' (want constant or exp:rate)");
}

ExperimentSpec::Kind to_kind(const std::string& v, int line, const std::string& key) {
  if (v == "lambda_sweep") return ExperimentSpec::Kind::LambdaSweep;
  if (v == "mode_refinement") return ExperimentSpec::Kind::ModeRefinement;
  if (v == "certificate") return ExperimentSpec::Kind::Certificate;
  if (v == "single_run") return ExperimentSpec::Kind::SingleRun;
  if (v == "axiom_check") return ExperimentSpec::Kind::AxiomCheck;
  throw ConfigError(line, key,
                    "unknown experiment kind '" + v +
                        "' (want lambda_sweep, mode_refinement, certificate, single_run, "
                        "axiom_check)");
}

std::string kind_name(ExperimentSpec::Kind k) {
  switch (k) {
    case ExperimentSpec::Kind::LambdaSweep: return "lambda_sweep";
    case ExperimentSpec::Kind::ModeRefinement: return "mode_refinement";
    case ExperimentSpec::Kind::Certificate: return "certificate";
    case ExperimentSpec::Kind::SingleRun: return "single_run";
    case ExperimentSpec::Kind::AxiomCheck: return "axiom_check";
  }
  return "single_run";
}

std::string field_token(const FieldSpec& spec) {
  std::string out;
  for (size_t i = 0; i < spec.size(); ++i) {
    if (i) out += ",";
    out += fmt17(spec[i].amp);
    out += spec[i].sine ? 's' : 'c';
    out += std::to_string(spec[i].mode);
  }
  return out;
}

std::string impulse_kernel_token(const std::vector<WaveInstance::ImpulseKernel>& ks) {
  std::string out;
  for (size_t i = 0; i < ks.size(); ++i) {
    if (i) out += ",";
    out += ks[i].family == WaveInstance::ImpulseKernel::Family::CosineDecay ? "cosine_decay"
                                                                            : "flat";
    out += ":" + fmt17(ks[i].gain);
  }
  return out;
}

template <class T>
std::string join17(const std::vector<T>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, double>)
      out += fmt17(xs[i]);
    else
      out += std::to_string(xs[i]);
  }
  return out;
}

} // namespace

std::string build_config_echo(const ExperimentSpec& s) {
  std::ostringstream o;
  o << "[problem]\n";
  o << "n_modes = " << s.n_modes << "\n";
  if (s.grid_size >= 0) o << "grid_size = " << s.grid_size << "\n";
  o << "horizon = " << fmt17(s.horizon) << "\n";
  o << "delay = " << fmt17(s.delay) << "\n";
  o << "dt = " << fmt17(s.dt) << "\n";
  o << "p = " << fmt17(s.p) << "\n";
  o << "b = " << s.advection_token << "\n";
  if (!s.phi.empty()) o << "phi = " << field_token(s.phi) << "\n";
  o << "phi_time = "
    << (s.phi_time.kind == TimeProfile::Kind::Constant ? std::string("constant")
                                                       : "exp:" + fmt17(s.phi_time.rate))
    << "\n";
  if (!s.eta.empty()) o << "eta = " << field_token(s.eta) << "\n";
  if (!s.target.empty()) o << "target = " << field_token(s.target) << "\n";
  o << "forcing_k0 = " << fmt17(s.instance.k0) << "\n";
  if (s.instance.delay_r >= 0.0) o << "forcing_delay = " << fmt17(s.instance.delay_r) << "\n";
  o << "nonlocal_l = " << fmt17(s.instance.nonlocal_l) << "\n";
  if (s.instance.nonlocal_tau >= 0.0)
    o << "nonlocal_tau = " << fmt17(s.instance.nonlocal_tau) << "\n";
  if (!s.instance.h_nodes.empty()) {
    o << "h_nodes = " << join17(s.instance.h_nodes) << "\n";
    o << "h_weights = " << join17(s.instance.h_weights) << "\n";
  }
  o << "\n[impulses]\n";
  if (!s.t_list.empty()) {
    o << "t_list = " << join17(s.t_list) << "\n";
    o << "s_list = " << join17(s.s_list) << "\n";
    o << "kernels = " << impulse_kernel_token(s.instance.impulse_kernels) << "\n";
  }
  o << "\n[control]\n";
  o << "kernel = " << s.kernel_token << "\n";
  if (s.control_kernel.kind == KernelDescriptor::Kind::ModeDiagonal)
    o << "gains = " << join17(s.control_kernel.gains) << "\n";
  o << "lambda = " << fmt17(s.lambda) << "\n";
  o << "gramian_nodes = " << s.gramian_nodes << "\n";
  o << "fp_tol = " << fmt17(s.fp_tol) << "\n";
  o << "fp_max_iters = " << s.fp_max_iters << "\n";
  o << "\n[experiment]\n";
  o << "kind = " << kind_name(s.kind) << "\n";
  o << "lambda_list = " << join17(s.lambdas) << "\n";
  o << "n_list = " << join17(s.n_list) << "\n";
  o << "out_dir = " << s.out_dir << "\n";
  o << "seed = " << s.seed << "\n";
  o << "deterministic_timing = " << (s.deterministic_timing ? "true" : "false") << "\n";
  o << "axiom_eps = " << fmt17(s.axiom_eps) << "\n";
  return o.str();
}

ConfigError::ConfigError(int line_no, std::string key_name, const std::string& what)
    : std::runtime_error("config line " + std::to_string(line_no) + ", key '" + key_name +
                         "': " + what),
      line(line_no),
      key(std::move(key_name)) {}

double TimeProfile::operator()(double s) const {
  return kind == Kind::Constant ? 1.0 : std::exp(rate * s);
}

SpectralField make_field(const FieldSpec& spec, const ModeBasis& basis) {
  SpectralField f = SpectralField::zero(basis, true);
  for (const FieldTerm& t : spec) {
    if (t.mode > basis.n_modes)
      throw std::invalid_argument("field term beyond the mode cutoff N = " +
                                  std::to_string(basis.n_modes));
    if (!t.sine) {
      if (t.mode == 0) {
        f.coeff(0) += 2.0 * kPi * t.amp;
      } else {
        f.coeff(t.mode) += kPi * t.amp;
        f.coeff(-t.mode) += kPi * t.amp;
      }
    } else {
      f.coeff(t.mode) += Complex(0.0, -kPi * t.amp);
      f.coeff(-t.mode) += Complex(0.0, kPi * t.amp);
    }
  }
  return f;
}

ExperimentSpec parse_config_text(const std::string& text) {
  ExperimentSpec s;
  s.instance.k0 = 0.0;
  s.instance.delay_r = -1.0;
  s.instance.nonlocal_l = 0.0;
  s.instance.nonlocal_tau = -1.0;
  s.instance.impulse_kernels.clear();

  std::map<std::string, int> seen; // "section.key" -> line
  const auto line_of = [&seen](const std::string& sk) {
    auto it = seen.find(sk);
    return it == seen.end() ? 0 : it->second;
  };

  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  bool kernels_set = false, lambda_list_set = false, n_list_set = false;
  bool n_modes_set = false, horizon_set = false, kind_set = false;

  while (std::getline(in, raw)) {
    ++line;
    std::string ln = trim(raw);
    if (ln.empty() || ln[0] == '#') continue;
    if (ln.front() == '[') {
      if (ln.back() != ']')
        throw ConfigError(line, ln, "malformed section header");
      section = ln.substr(1, ln.size() - 2);
      if (section != "problem" && section != "impulses" && section != "control" &&
          section != "experiment")
        throw ConfigError(line, section, "unknown section");
      continue;
    }
    const size_t eq = ln.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, ln, "expected key = value");
    const std::string key = trim(ln.substr(0, eq));
    const std::string val = trim(ln.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, ln, "empty key");
    if (val.empty()) throw ConfigError(line, key, "empty value");
    if (section.empty()) throw ConfigError(line, key, "key before any section header");
    const std::string sk = section + "." + key;
    if (!seen.emplace(sk, line).second)
      throw ConfigError(line, key, "duplicate key in [" + section + "]");

    if (section == "problem") {
      if (key == "n_modes") {
        s.n_modes = to_int(val, line, key);
        n_modes_set = true;
      } else if (key == "grid_size") {
        s.grid_size = to_int(val, line, key);
      } else if (key == "horizon") {
        s.horizon = to_double(val, line, key);
        horizon_set = true;
      } else if (key == "delay") {
        s.delay = to_double(val, line, key);
      } else if (key == "dt") {
        s.dt = to_double(val, line, key);
      } else if (key == "p") {
        s.p = to_double(val, line, key);
      } else if (key == "b") {
        s.advection = to_coefficient(val, line, key, s.advection_token);
      } else if (key == "phi") {
        s.phi = to_field(val, line, key);
      } else if (key == "phi_time") {
        s.phi_time = to_profile(val, line, key);
      } else if (key == "eta") {
        s.eta = to_field(val, line, key);
      } else if (key == "target") {
        s.target = to_field(val, line, key);
      } else if (key == "forcing_k0") {
        s.instance.k0 = to_double(val, line, key);
      } else if (key == "forcing_delay") {
        s.instance.delay_r = to_double(val, line, key);
      } else if (key == "nonlocal_l") {
        s.instance.nonlocal_l = to_double(val, line, key);
      } else if (key == "nonlocal_tau") {
        s.instance.nonlocal_tau = to_double(val, line, key);
      } else if (key == "h_nodes") {
        s.instance.h_nodes = to_double_list(val, line, key);
      } else if (key == "h_weights") {
        s.instance.h_weights = to_double_list(val, line, key);
      } else {
        throw ConfigError(line, key, "unknown key in [problem]");
      }
    } else if (section == "impulses") {
      if (key == "t_list") {
        s.t_list = to_double_list(val, line, key);
      } else if (key == "s_list") {
        s.s_list = to_double_list(val, line, key);
      } else if (key == "kernels") {
        s.instance.impulse_kernels = to_impulse_kernels(val, line, key);
        kernels_set = true;
      } else {
        throw ConfigError(line, key, "unknown key in [impulses]");
      }
    } else if (section == "control") {
      if (key == "kernel") {
        s.control_kernel = to_kernel(val, line, key, s.kernel_token);
      } else if (key == "gains") {
        s.control_kernel.gains = to_double_list(val, line, key);
      } else if (key == "lambda") {
        s.lambda = to_double(val, line, key);
      } else if (key == "gramian_nodes") {
        s.gramian_nodes = to_int(val, line, key);
      } else if (key == "fp_tol") {
        s.fp_tol = to_double(val, line, key);
      } else if (key == "fp_max_iters") {
        s.fp_max_iters = to_int(val, line, key);
      } else {
        throw ConfigError(line, key, "unknown key in [control]");
      }
    } else { // experiment
      if (key == "kind") {
        s.kind = to_kind(val, line, key);
        kind_set = true;
      } else if (key == "lambda_list") {
        s.lambdas = to_double_list(val, line, key);
        lambda_list_set = true;
      } else if (key == "n_list") {
        s.n_list = to_int_list(val, line, key);
        n_list_set = true;
      } else if (key == "out_dir") {
        s.out_dir = val;
      } else if (key == "seed") {
        const long v = to_long(val, line, key);
        if (v < 0) throw ConfigError(line, key, "seed must be nonnegative");
        s.seed = static_cast<unsigned>(v);
      } else if (key == "deterministic_timing") {
        s.deterministic_timing = to_bool(val, line, key);
      } else if (key == "axiom_eps") {
        s.axiom_eps = to_double(val, line, key);
      } else {
        throw ConfigError(line, key, "unknown key in [experiment]");
      }
    }
  }

  if (!kind_set) throw ConfigError(0, "kind", "missing required key in [experiment]");
  if (!n_modes_set) throw ConfigError(0, "n_modes", "missing required key in [problem]");
  if (!horizon_set) throw ConfigError(0, "horizon", "missing required key in [problem]");

  const auto bad = [&](const std::string& sk, const std::string& key,
                       const std::string& msg) -> ConfigError {
    return ConfigError(line_of(sk), key, msg);
  };

  if (s.n_modes < 1) throw bad("problem.n_modes", "n_modes", "must be >= 1");
  if (s.horizon <= 0.0) throw bad("problem.horizon", "horizon", "must be > 0");
  if (s.dt <= 0.0) throw bad("problem.dt", "dt", "must be > 0");
  if (s.delay < 0.0) throw bad("problem.delay", "delay", "must be >= 0");
  if (s.p < 2.0) throw bad("problem.p", "p", "must be >= 2");
  if (s.instance.k0 < 0.0) throw bad("problem.forcing_k0", "forcing_k0", "must be >= 0");
  if (s.instance.nonlocal_l < 0.0)
    throw bad("problem.nonlocal_l", "nonlocal_l", "must be >= 0");
  if (s.instance.h_nodes.size() != s.instance.h_weights.size())
    throw bad("problem.h_weights", "h_weights", "length differs from h_nodes");
  if (s.lambda <= 0.0) throw bad("control.lambda", "lambda", "must be > 0");
  if (s.gramian_nodes < 8 || s.gramian_nodes % 2 != 0)
    throw bad("control.gramian_nodes", "gramian_nodes", "must be even and >= 8");
  if (s.fp_tol <= 0.0) throw bad("control.fp_tol", "fp_tol", "must be > 0");
  if (s.fp_max_iters < 1) throw bad("control.fp_max_iters", "fp_max_iters", "must be >= 1");
  if (s.axiom_eps <= 0.0) throw bad("experiment.axiom_eps", "axiom_eps", "must be > 0");

  if (s.t_list.size() != s.s_list.size())
    throw bad("impulses.s_list", "s_list", "length differs from t_list");
  double prev = 0.0;
  for (size_t i = 0; i < s.t_list.size(); ++i) {
    const bool ok = (i == 0 ? s.t_list[i] > 0.0 : s.t_list[i] >= prev) &&
                    s.s_list[i] >= s.t_list[i] && s.s_list[i] <= s.horizon;
    if (!ok)
      throw bad("impulses.t_list", "t_list",
                "impulse times must satisfy 0 < t_1 <= s_1 <= ... <= T");
    prev = s.s_list[i];
  }
  if (!kernels_set) {
    s.instance.impulse_kernels.assign(s.t_list.size(), WaveInstance::ImpulseKernel{});
  } else if (s.instance.impulse_kernels.size() != s.t_list.size()) {
    throw bad("impulses.kernels", "kernels", "need exactly one kernel per impulse window");
  }

  if (!lambda_list_set) s.lambdas = {s.lambda};
  for (double l : s.lambdas)
    if (l <= 0.0)
      throw bad("experiment.lambda_list", "lambda_list", "lambda values must be > 0");
  if (s.kind == ExperimentSpec::Kind::LambdaSweep) {
    for (size_t i = 1; i < s.lambdas.size(); ++i)
      if (s.lambdas[i] > s.lambdas[i - 1])
        throw bad("experiment.lambda_list", "lambda_list",
                  "sweep lambda values must be nonincreasing");
  }
  if (!n_list_set) s.n_list = {s.n_modes};
  for (int n : s.n_list)
    if (n < 1) throw bad("experiment.n_list", "n_list", "mode counts must be >= 1");

  if (s.control_kernel.kind == KernelDescriptor::Kind::ModeDiagonal) {
    for (double g : s.control_kernel.gains)
      if (g == 0.0) throw bad("control.gains", "gains", "diagonal gains must be nonzero");
  }

  s.echo = build_config_echo(s);
  return s;
}

ExperimentSpec parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, path, "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

ProblemConfig materialize(const ExperimentSpec& s, int n_modes) {
  ProblemConfig cfg;
  cfg.basis = ModeBasis::make(n_modes, s.grid_size);
  cfg.horizon = s.horizon;
  cfg.delay = s.delay;
  cfg.dt = s.dt;
  cfg.lambda = s.lambda;
  cfg.p = s.p;
  cfg.advection = s.advection;
  cfg.kernel = s.control_kernel;
  cfg.gramian_nodes = s.gramian_nodes;
  cfg.fp_tol = s.fp_tol;
  cfg.fp_max_iters = s.fp_max_iters;

  const ModeBasis basis = cfg.basis;
  const SpectralField phi0 = make_field(s.phi, basis);
  const TimeProfile prof = s.phi_time;
  cfg.history = [phi0, prof](double t) {
    SpectralField f = phi0;
    f *= prof(t);
    return f;
  };
  cfg.velocity = make_field(s.eta, basis);
  cfg.target = make_field(s.target, basis);

  cfg.impulses.resize(s.t_list.size());
  for (size_t i = 0; i < s.t_list.size(); ++i) {
    cfg.impulses[i].t_begin = s.t_list[i];
    cfg.impulses[i].s_end = s.s_list[i];
  }

  WaveInstance w = s.instance;
  w.horizon = s.horizon;
  w.p = s.p;
  if (w.nonlocal_tau < 0.0) w.nonlocal_tau = s.horizon;
  if (w.k0 > 0.0 && w.delay_r < 0.0) w.delay_r = s.delay;
  const bool active = w.k0 > 0.0 || !cfg.impulses.empty() || w.nonlocal_l > 0.0 ||
                      !w.h_nodes.empty();
  if (active) {
    bind_wave_instance(cfg, w);
  } else {
    cfg.bound_m_g = 0.0;
    cfg.bound_m_h = 0.0;
  }
  cfg.validate();
  return cfg;
}

} // namespace wavectrl
