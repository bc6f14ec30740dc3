#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "projopt/manifold.hpp"
#include "projopt/models.hpp"
#include "projopt/types.hpp"

namespace projopt {

enum class ConvergenceCriterion {
  kResidualNorm,
  kDistanceToReference,
};

enum class AufbauMode {
  kLowestN,
  /// Occupy the eigenvectors with the largest squared overlap with the range
  /// of the previous iterate instead of the lowest eigenvalues.
  kOverlapWithPrevious,
};

enum class Termination {
  kConverged,
  kMaxIterations,
  kAufbauDegenerate,
  kRetractionFailure,
  kNonphysical,
  kLineSearchFailure,
};

const char* to_string(Termination t);

struct SolverConfig {
  double beta = 0.1;
  int max_iterations = 10000;
  double tolerance = 1e-10;
  ConvergenceCriterion criterion = ConvergenceCriterion::kResidualNorm;
  std::optional<Matrix> reference;  // target of the distance criterion
  AufbauMode aufbau_mode = AufbauMode::kLowestN;
  double gap_tolerance = 1e-12;
  std::uint64_t seed = 0;
  int anderson_depth = 5;
  double anderson_regularization = 1e-12;
  /// Keep every iterate in SolverTrace::iterates (always on for the plain
  /// self-consistent iteration, whose oscillations are themselves of interest).
  bool record_iterates = false;

  void validate() const;
};

struct IterationRecord {
  double energy = 0.0;
  double residual = 0.0;       // norm of the solver's own residual at this point
  double step_distance = 0.0;  // ||P^k - P^{k-1}||_F, 0 for the initial record
  double distance_to_reference = 0.0;  // NaN when no reference is set
};

struct SolverTrace {
  IterationRecord initial;               // state at P^0
  std::vector<IterationRecord> records;  // one per update step
  Termination termination = Termination::kMaxIterations;
  Matrix final_p;
  std::vector<Matrix> iterates;  // includes P^0 when recording is on

  int iterations() const { return static_cast<int>(records.size()); }
  bool converged() const { return termination == Termination::kConverged; }
  const IterationRecord& last() const {
    return records.empty() ? initial : records.back();
  }
};

/// Orbitals with fractional occupations: a point of the convex hull of the
/// manifold, P = sum_k f_k phi_k phi_k^T with 0 <= f_k <= 1, sum f_k = N.
struct OccupationState {
  Matrix orbitals;      // orthogonal, column k paired with occupations[k]
  Vector occupations;
  double fermi_level = 0.0;

  Matrix assemble() const;
  /// Largest distance of any occupation from {0, 1}.
  double max_fractional() const;
};

/// Spectral projector onto the lowest-N eigenvectors of H. Throws
/// AufbauDegenerate when eps_{N+1} - eps_N <= gap_tolerance.
DensityMatrix aufbau_projector(const Matrix& h, int n, double gap_tolerance);

/// The self-consistent map target Phi(P): the aufbau projector of H(P), or
/// with the overlap rule the N eigenvectors closest in range to prev.
DensityMatrix scf_target(const EnergyModel& model, const Matrix& p,
                         AufbauMode mode, const Matrix& prev,
                         double gap_tolerance);

/// One update of each iteration, exposed for finite-difference probes.
DensityMatrix gradient_step(const EnergyModel& model, const DensityMatrix& p,
                            double beta);
DensityMatrix damped_scf_step(const EnergyModel& model, const DensityMatrix& p,
                              double beta, AufbauMode mode,
                              double gap_tolerance);

/// Fixed-step steepest descent with tangent projection and retraction:
///   P <- R(P - beta Pi_P(grad E(P))).
SolverTrace gradient_descent(const EnergyModel& model, const DensityMatrix& p0,
                             const SolverConfig& config);

/// Damped self-consistent iteration with retraction:
///   P <- R(P + beta Pi_P(Phi(P) - P)).
SolverTrace damped_scf(const EnergyModel& model, const DensityMatrix& p0,
                       const SolverConfig& config);

/// Density-mixing variant without projection or retraction:
///   P <- P + beta (Phi(P) - P).
/// Iterates keep trace N but generally leave the manifold; the limit, when
/// the iteration converges, is back on it.
SolverTrace damped_scf_nonretracted(const EnergyModel& model, const Matrix& p0,
                                    const SolverConfig& config);

/// Plain self-consistent iteration P <- Phi(P). Records the full iterate
/// history and never mistakes a 2-cycle for convergence.
SolverTrace roothaan_scf(const EnergyModel& model, const DensityMatrix& p0,
                         const SolverConfig& config);

/// Minimization of E over the convex hull of the manifold by optimal damping:
/// line searches along aufbau directions, filling a degenerate Fermi level
/// fractionally when one appears.
std::pair<OccupationState, SolverTrace> oda(const EnergyModel& model,
                                            const Matrix& p0,
                                            const SolverConfig& config);

/// Anderson-accelerated density mixing: least-squares combination of the last
/// `anderson_depth` residuals of the map P -> P + beta (Phi(P) - P). Depth 0
/// reproduces the plain mixing exactly.
SolverTrace anderson_mixing(const EnergyModel& model, const Matrix& p0,
                            const SolverConfig& config);

}  // namespace projopt
