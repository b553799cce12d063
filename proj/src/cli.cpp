#include "wavectrl/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wavectrl/experiments.hpp"

namespace wavectrl {

namespace {

int env_threads() {
  const char* env = std::getenv("WAVECTRL_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1)
    throw ConfigError(0, "WAVECTRL_THREADS", "must be a positive integer");
  return static_cast<int>(v);
}

bool kind_allowed(const std::string& sub, ExperimentSpec::Kind kind) {
  using K = ExperimentSpec::Kind;
  if (sub == "run") return kind == K::SingleRun;
  if (sub == "sweep") return kind == K::LambdaSweep || kind == K::ModeRefinement;
  if (sub == "certify") return kind == K::Certificate;
  return kind == K::AxiomCheck; // axioms
}

} // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Spectral simulation and regularized control synthesis for a "
               "non-autonomous wave equation with delay, impulses, and nonlocal data"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  const auto add = [&](const std::string& name, const std::string& desc) {
    CLI::App* c = app.add_subcommand(name, desc);
    c->add_option("config", config_path, "experiment config file")->required();
    c->add_option("--out", out_override, "override the output directory");
    return c;
  };
  add("run", "solve one configuration; dump trajectory, control, diagnostics");
  add("sweep", "lambda or mode-count sweep to CSV");
  add("certify", "Gramian eigenvalue certificates and feasibility report");
  add("axioms", "evolution-operator axiom residuals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const int threads = env_threads();
    ExperimentSpec spec = parse_config(config_path);
    const std::string sub = app.get_subcommands().front()->get_name();
    if (!kind_allowed(sub, spec.kind))
      throw ConfigError(0, "kind",
                        "experiment kind in the config does not match the subcommand '" +
                            sub + "'");
    if (!out_override.empty()) {
      spec.out_dir = out_override;
      spec.echo = build_config_echo(spec);
    }
    return run_experiment(spec, threads, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IterationFailure& e) {
    std::cerr << e.what() << " (residual " << e.residual << " after " << e.iterations
              << " iterations)\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

} // namespace wavectrl
