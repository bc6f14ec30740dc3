// Command line harness around the experiment drivers.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "projopt/config.hpp"
#include "projopt/experiments.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::int64_t seed = -1;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "key=value configuration file overriding the defaults");
  cmd->add_option("--out", flags.out, "output file (default: stdout)");
  cmd->add_option("--seed", flags.seed, "random seed override");
  cmd->add_option("--jobs", flags.jobs, "worker threads for sweep points");
}

int run(projopt::ExperimentKind kind, const CommonFlags& flags) {
  projopt::ExperimentConfig config = projopt::default_config(kind);
  if (!flags.config_path.empty()) config.load_file(flags.config_path);
  config.experiment = kind;  // the subcommand wins over the file
  if (!flags.out.empty()) config.out = flags.out;
  if (flags.seed >= 0) config.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.jobs > 0) config.jobs = flags.jobs;
  const std::string summary = projopt::run_experiment(config);
  std::cerr << summary << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Energy minimization over fixed-rank projector manifolds: solvers, "
      "convergence-rate analysis and experiment sweeps"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    projopt::ExperimentKind kind;
  };
  const Sub subs[] = {
      {"toy-sweep",
       "iterations to convergence vs the gap parameter of the 2x2 model",
       projopt::ExperimentKind::kToySweep},
      {"chaos",
       "bifurcation diagram of the plain self-consistent iteration on the "
       "three-site model",
       projopt::ExperimentKind::kChaosBifurcation},
      {"gp-rate",
       "observed vs predicted asymptotic rates on the 1D lattice model",
       projopt::ExperimentKind::kGpRate},
      {"gp-bifurcation",
       "two-particle lattice sweep: where the relaxed minimizer leaves the "
       "manifold",
       projopt::ExperimentKind::kGpBifurcation},
      {"gp-compare",
       "limits of gradient descent, damped self-consistency and optimal "
       "damping at strong interaction",
       projopt::ExperimentKind::kGpCompare},
      {"analyze",
       "iteration-Jacobian rate report for a configured model at its solution",
       projopt::ExperimentKind::kAnalyze},
  };

  CommonFlags flags[std::size(subs)];
  for (std::size_t i = 0; i < std::size(subs); ++i) {
    CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
    add_common(cmd, flags[i]);
    cmd->callback([&, i] { run(subs[i].kind, flags[i]); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const projopt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
