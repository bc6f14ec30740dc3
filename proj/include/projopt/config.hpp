#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "projopt/types.hpp"

namespace projopt {

inline constexpr const char* kVersion = "projopt 0.1.0";

enum class ExperimentKind {
  kToySweep,
  kChaosBifurcation,
  kGpRate,
  kGpBifurcation,
  kGpCompare,
  kAnalyze,
};

const char* to_string(ExperimentKind kind);

struct GridSpec {
  double start = 0.0;
  double stop = 1.0;
  int count = 2;
  bool log_spacing = false;

  std::vector<double> points() const;
};

/// Flat key=value configuration for the experiment harness. Every experiment
/// has complete defaults, so a config file only needs the keys it overrides.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kToySweep;
  GridSpec grid;
  std::uint64_t seed = 42;
  int jobs = 1;
  std::string out;

  // Shared solver knobs.
  double beta = 0.1;            // step of the solver under study
  double beta_grad = 1e-4;      // gradient step where both solvers run
  double beta_scf = 0.1;        // damping where both solvers run
  double tolerance = 1e-12;
  double grad_tolerance = 1e-9;  // residual target of gradient runs
  int max_iterations = 50000;
  double gap_tolerance = 1e-12;
  int rate_window = 40;

  // Model parameters.
  double epsilon = 0.1;  // tunable-gap model
  double c1 = 0.5;       // three-site model sweep axis value
  double c2 = 1.0;
  int n_b = 100;
  int n_electrons = 1;
  double alpha = 50.0;

  // Chaos sweep controls.
  int chaos_iterations = 1500;
  int chaos_tail = 40;
  int period_cap = 64;
  double period_tolerance = 1e-9;

  // Rate study controls.
  double perturbation = 1e-2;
  int rate_window_grad = 300;
  double fd_step = 1e-6;

  // Relaxed-minimization controls.
  double oda_tolerance = 1e-11;
  int oda_max_iterations = 50000;

  // Analyze controls.
  std::string analyze_model = "toy";  // toy | chaos | gp
  std::string analyze_kind = "scf";   // grad | scf

  /// Applies one key=value override. Throws Error on unknown keys or
  /// malformed values.
  void set(const std::string& key, const std::string& value);

  /// Parses a flat key=value file ('#' comments, blank lines ignored).
  void load_file(const std::string& path);

  /// Echo of every field in key=value form, used for CSV headers.
  std::vector<std::pair<std::string, std::string>> items() const;

  void validate() const;
};

/// Paper-default configuration for each subcommand.
ExperimentConfig default_config(ExperimentKind kind);

}  // namespace projopt
