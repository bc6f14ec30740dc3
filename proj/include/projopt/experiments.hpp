#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "projopt/config.hpp"
#include "projopt/solvers.hpp"
#include "projopt/spectral.hpp"
#include "projopt/types.hpp"

namespace projopt {

// ---------------------------------------------------------------------------
// Gap sweep on the tunable-gap model: iterations to convergence per solver.

struct ToySweepPoint {
  double epsilon = 0.0;
  std::string solver;  // "grad" or "scf"
  int iterations = 0;
  Termination termination = Termination::kMaxIterations;
  double observed_rate = 0.0;  // NaN when the trace is too short
};

struct ToySweepResult {
  ExperimentConfig config;
  double predicted_epsilon_c = 0.0;  // sqrt(beta / 4)
  std::vector<ToySweepPoint> points;  // 2 rows per grid value, grad then scf

  /// Largest epsilon whose damped-scf run hit the iteration cap and smallest
  /// that converged; either may be absent at the grid edges.
  std::optional<double> scf_last_failure() const;
  std::optional<double> scf_first_success() const;

  void write_csv(std::ostream& os) const;
};

ToySweepResult run_toy_sweep(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Bifurcation diagram of the plain self-consistent iteration on the
// three-site model. The sweep parameter is on the published axis scale: the
// iteration sees couplings (2 c1, 2 c2), which places the first period
// doubling at c1 = 0.28 for c2 = 0 and at c1 = 1.38 for c2 = 1.

struct ChaosPoint {
  double c1 = 0.0;
  int period = 0;  // detected cycle length; 0 = aperiodic, -1 = failed run
  Termination termination = Termination::kMaxIterations;
  std::vector<double> tail_rho1;  // first density component over the tail
  int tail_start = 0;             // 1-based iteration index of tail_rho1[0]
};

struct ChaosResult {
  ExperimentConfig config;
  std::vector<ChaosPoint> points;

  std::optional<double> last_period1() const;
  std::optional<double> first_period2() const;
  bool has_period(int period) const;
  bool has_aperiodic() const;

  void write_csv(std::ostream& os) const;
};

ChaosResult run_chaos_bifurcation(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Asymptotic-rate validation on the lattice model (one particle): observed
// decay factors against the spectral radii of the analytic and
// finite-difference Jacobians, from a plain and a perturbed start.

struct GpRateRun {
  std::string start_kind;  // "plain" or "perturbed"
  std::string solver;      // "grad" or "scf"
  double observed_rate = 0.0;
  double predicted_rate_fd = 0.0;
  double predicted_rate_analytic = 0.0;
  Termination termination = Termination::kMaxIterations;
};

struct GpRateResult {
  ExperimentConfig config;
  std::vector<GpRateRun> runs;  // plain/grad, plain/scf, perturbed/grad, perturbed/scf
  bool scf_plain_anomaly = false;  // plain-start scf decays faster than predicted
  bool orbital_single_signed = false;
  double relaxed_density_agreement = 0.0;  // two seeded relaxed runs, max density gap
  double gap = 0.0;         // nu at the minimizer
  double coercivity = 0.0;  // eta at the minimizer

  const GpRateRun& find(const std::string& start,
                        const std::string& solver) const;

  void write_csv(std::ostream& os) const;
};

GpRateResult run_gp_rate(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Two-particle lattice sweep over the interaction strength: the relaxed
// minimizer leaves the manifold at a critical alpha, where its Fermi level
// becomes fractionally occupied and degenerate.

struct GpBifurcationEntry {
  double energy = 0.0;
  double rho7 = 0.0;  // density at the seventh grid site
  double eps1 = 0.0, eps2 = 0.0, eps3 = 0.0;
  double max_fractional = 0.0;
  Termination termination = Termination::kMaxIterations;
};

struct GpBifurcationPoint {
  double alpha = 0.0;
  GpBifurcationEntry grad;
  GpBifurcationEntry oda;
  double limit_distance = 0.0;  // ||P_grad - P_oda||_F
};

struct GpBifurcationResult {
  ExperimentConfig config;
  std::vector<GpBifurcationPoint> points;

  /// Grid bracket around the first alpha with fractional occupations.
  std::optional<std::pair<double, double>> critical_bracket() const;

  void write_csv(std::ostream& os) const;
};

GpBifurcationResult run_gp_bifurcation(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Side-by-side limits of the three schemes on the two-particle lattice at
// strong interaction: a non-aufbau critical point (gradient), a spurious
// stationary state of the damped self-consistent map (scf), and an
// off-manifold relaxed minimizer (oda).

struct GpCompareEntry {
  std::string solver;
  Matrix limit;
  Vector density;
  Vector effective_potential;  // V + alpha * rho
  Vector eps_low;              // lowest eigenvalues of H at the limit
  Vector occupations;          // spectrum of the limit itself
  double energy = 0.0;
  double grad_residual = 0.0;      // ||Pi_P grad E||
  double scf_residual = 0.0;       // ||Pi_P (Phi - P)||
  double scf_target_distance = 0.0;  // ||Phi - P||
  double commutator_norm = 0.0;      // ||[H(P), P]||
  std::vector<int> occupied_ranks;   // 1-based eigenlevel indices spanning P
  Termination termination = Termination::kMaxIterations;
};

struct GpCompareResult {
  ExperimentConfig config;
  std::vector<GpCompareEntry> entries;  // grad, scf, oda
  double distance_grad_scf = 0.0;
  double distance_grad_oda = 0.0;
  double distance_scf_oda = 0.0;

  const GpCompareEntry& find(const std::string& solver) const;

  void write_csv(std::ostream& os) const;
};

GpCompareResult run_gp_compare(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Rate report for a configured model at its own solution.

struct AnalyzeResult {
  ExperimentConfig config;
  RateReport report;
  double rate_at_beta = 0.0;

  void write_report(std::ostream& os) const;
};

AnalyzeResult run_analyze(const ExperimentConfig& config);

/// Dispatches on config.experiment and writes the result to config.out
/// (stdout when empty). Returns a one-line summary.
std::string run_experiment(const ExperimentConfig& config);

}  // namespace projopt
