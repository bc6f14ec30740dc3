#include "projopt/solvers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

namespace projopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double distance_or_nan(const SolverConfig& config, const Matrix& p) {
  if (!config.reference) return kNaN;
  return (p - *config.reference).norm();
}

bool criterion_met(const SolverConfig& config, double residual,
                   double distance) {
  if (config.criterion == ConvergenceCriterion::kResidualNorm) {
    return residual <= config.tolerance;
  }
  return distance <= config.tolerance;
}

/// Shared bookkeeping for the iteration loops.
struct TraceBuilder {
  explicit TraceBuilder(const SolverConfig& config) : config_(config) {}

  void set_initial(const Matrix& p, double energy, double residual) {
    trace.initial = {energy, residual, 0.0, distance_or_nan(config_, p)};
    if (config_.record_iterates) trace.iterates.push_back(p);
  }

  void push(const Matrix& p, double energy, double residual,
            double step_distance) {
    trace.records.push_back(
        {energy, residual, step_distance, distance_or_nan(config_, p)});
    if (config_.record_iterates) trace.iterates.push_back(p);
  }

  SolverTrace finish(Termination t, Matrix final_p) {
    trace.termination = t;
    trace.final_p = std::move(final_p);
    return std::move(trace);
  }

  SolverTrace trace;

 private:
  const SolverConfig& config_;
};

bool is_quadratic_along_segments(const EnergyModel& model) {
  if (dynamic_cast<const ToyGapModel*>(&model) != nullptr) return true;
  if (dynamic_cast<const GrossPitaevskii1D*>(&model) != nullptr) return true;
  if (dynamic_cast<const LinearModel*>(&model) != nullptr) return true;
  if (const auto* chaos = dynamic_cast<const ChaosModel*>(&model)) {
    return chaos->c2() == 0.0;
  }
  return false;
}

/// Minimizer of lambda -> E(d + lambda * direction) over [0, 1]. Exact for
/// models whose restriction to a segment is a quadratic; golden section
/// otherwise.
double line_search_lambda(const EnergyModel& model, const Matrix& d,
                          const Matrix& direction) {
  const double slope = frobenius_inner(model.gradient(d), direction);
  if (is_quadratic_along_segments(model)) {
    const double curv = frobenius_inner(direction,
                                        model.hessian_apply(d, direction));
    if (curv > 0.0) {
      return std::clamp(-slope / curv, 0.0, 1.0);
    }
    return slope < 0.0 ? 1.0 : 0.0;
  }
  // Golden section to 1e-12 on [0,1].
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 1.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = model.energy(d + x1 * direction);
  double f2 = model.energy(d + x2 * direction);
  while (b - a > 1e-12) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = model.energy(d + x1 * direction);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = model.energy(d + x2 * direction);
    }
  }
  const double mid = 0.5 * (a + b);
  // Endpoints can beat the interior bracket when the minimum is at a bound.
  const double fm = model.energy(d + mid * direction);
  const double f0 = model.energy(d);
  const double fe = model.energy(d + direction);
  if (f0 <= fm && f0 <= fe) return 0.0;
  if (fe <= fm) return 1.0;
  return mid;
}

int checked_integer_trace(const Matrix& p0, const char* what) {
  if ((p0 - p0.transpose()).norm() > 1e-10 * std::max(p0.norm(), 1.0)) {
    throw Error(std::string(what) + ": starting point must be symmetric");
  }
  const double tr = p0.trace();
  const int n = static_cast<int>(std::lround(tr));
  if (std::abs(tr - n) > 1e-8 || n < 1 || n > p0.rows()) {
    throw Error(std::string(what) + ": trace must be a valid integer rank");
  }
  return n;
}

}  // namespace

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kConverged:
      return "converged";
    case Termination::kMaxIterations:
      return "max_iter";
    case Termination::kAufbauDegenerate:
      return "aufbau_degenerate";
    case Termination::kRetractionFailure:
      return "retraction_failure";
    case Termination::kNonphysical:
      return "nonphysical";
    case Termination::kLineSearchFailure:
      return "line_search_failure";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(beta > 0.0) || beta > 1.0) {
    throw Error("SolverConfig: beta must lie in (0, 1]");
  }
  if (!(tolerance > 0.0)) {
    throw Error("SolverConfig: tolerance must be positive");
  }
  if (max_iterations < 1) {
    throw Error("SolverConfig: max_iterations must be >= 1");
  }
  if (criterion == ConvergenceCriterion::kDistanceToReference && !reference) {
    throw Error("SolverConfig: distance criterion needs a reference point");
  }
  if (anderson_depth < 0) {
    throw Error("SolverConfig: anderson_depth must be >= 0");
  }
}

Matrix OccupationState::assemble() const {
  return orbitals * occupations.asDiagonal() * orbitals.transpose();
}

double OccupationState::max_fractional() const {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < occupations.size(); ++k) {
    worst = std::max(worst, std::min(occupations[k], 1.0 - occupations[k]));
  }
  return worst;
}

DensityMatrix aufbau_projector(const Matrix& h, int n, double gap_tolerance) {
  const SpectralDecomposition dec = spectral_decompose(h, n);
  if (n < h.rows() && dec.gap() <= gap_tolerance) {
    throw AufbauDegenerate("aufbau_projector: eps_{N+1} - eps_N = " +
                           std::to_string(dec.gap()));
  }
  Matrix p = dec.occupied_projector();
  p = 0.5 * (p + p.transpose());
  return DensityMatrix(std::move(p));
}

DensityMatrix scf_target(const EnergyModel& model, const Matrix& p,
                         AufbauMode mode, const Matrix& prev,
                         double gap_tolerance) {
  const Matrix h = model.gradient(p);
  const int n = checked_integer_trace(p, "scf_target");
  if (mode == AufbauMode::kLowestN) {
    return aufbau_projector(h, n, gap_tolerance);
  }
  // Occupy the N eigenvectors with the largest squared overlap with Ran(prev),
  // ties resolved toward lower eigenvalues.
  const SpectralDecomposition dec = spectral_decompose(h, n);
  const int n_b = model.dim();
  std::vector<int> order(n_b);
  std::iota(order.begin(), order.end(), 0);
  Vector overlap(n_b);
  for (int k = 0; k < n_b; ++k) {
    overlap[k] = dec.eigenvectors.col(k).dot(prev * dec.eigenvectors.col(k));
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (overlap[a] != overlap[b]) return overlap[a] > overlap[b];
    return a < b;
  });
  Matrix occ(n_b, n);
  std::vector<int> chosen(order.begin(), order.begin() + n);
  std::sort(chosen.begin(), chosen.end());
  for (int j = 0; j < n; ++j) {
    occ.col(j) = dec.eigenvectors.col(chosen[j]);
  }
  Matrix proj = occ * occ.transpose();
  proj = 0.5 * (proj + proj.transpose());
  return DensityMatrix(std::move(proj));
}

DensityMatrix gradient_step(const EnergyModel& model, const DensityMatrix& p,
                            double beta) {
  const Matrix direction =
      tangent_project_matrix(p.matrix(), model.gradient(p.matrix()));
  return retract(p.matrix() - beta * direction, p.rank());
}

DensityMatrix damped_scf_step(const EnergyModel& model, const DensityMatrix& p,
                              double beta, AufbauMode mode,
                              double gap_tolerance) {
  const DensityMatrix phi =
      scf_target(model, p.matrix(), mode, p.matrix(), gap_tolerance);
  const Matrix direction =
      tangent_project_matrix(p.matrix(), phi.matrix() - p.matrix());
  return retract(p.matrix() + beta * direction, p.rank());
}

SolverTrace gradient_descent(const EnergyModel& model, const DensityMatrix& p0,
                             const SolverConfig& config) {
  config.validate();
  TraceBuilder builder(config);
  Matrix p = p0.matrix();
  const int n = p0.rank();

  try {
    Matrix direction = tangent_project_matrix(p, model.gradient(p));
    double residual = direction.norm();
    builder.set_initial(p, model.energy(p), residual);
    if (criterion_met(config, residual, distance_or_nan(config, p))) {
      return builder.finish(Termination::kConverged, std::move(p));
    }
    for (int k = 0; k < config.max_iterations; ++k) {
      Matrix next;
      try {
        next = retract(p - config.beta * direction, n).matrix();
      } catch (const RetractionRankMismatch&) {
        return builder.finish(Termination::kRetractionFailure, std::move(p));
      }
      direction = tangent_project_matrix(next, model.gradient(next));
      residual = direction.norm();
      const double step = (next - p).norm();
      p = std::move(next);
      builder.push(p, model.energy(p), residual, step);
      if (criterion_met(config, residual, distance_or_nan(config, p))) {
        return builder.finish(Termination::kConverged, std::move(p));
      }
    }
  } catch (const NonphysicalDensity&) {
    return builder.finish(Termination::kNonphysical, std::move(p));
  }
  return builder.finish(Termination::kMaxIterations, std::move(p));
}

SolverTrace damped_scf(const EnergyModel& model, const DensityMatrix& p0,
                       const SolverConfig& config) {
  config.validate();
  TraceBuilder builder(config);
  Matrix p = p0.matrix();
  const int n = p0.rank();

  try {
    Matrix phi = scf_target(model, p, config.aufbau_mode, p,
                            config.gap_tolerance).matrix();
    Matrix direction = tangent_project_matrix(p, phi - p);
    double residual = direction.norm();
    builder.set_initial(p, model.energy(p), residual);
    if (criterion_met(config, residual, distance_or_nan(config, p))) {
      return builder.finish(Termination::kConverged, std::move(p));
    }
    for (int k = 0; k < config.max_iterations; ++k) {
      Matrix next;
      try {
        next = retract(p + config.beta * direction, n).matrix();
      } catch (const RetractionRankMismatch&) {
        return builder.finish(Termination::kRetractionFailure, std::move(p));
      }
      phi = scf_target(model, next, config.aufbau_mode, next,
                       config.gap_tolerance).matrix();
      direction = tangent_project_matrix(next, phi - next);
      residual = direction.norm();
      const double step = (next - p).norm();
      p = std::move(next);
      builder.push(p, model.energy(p), residual, step);
      if (criterion_met(config, residual, distance_or_nan(config, p))) {
        return builder.finish(Termination::kConverged, std::move(p));
      }
    }
  } catch (const AufbauDegenerate&) {
    return builder.finish(Termination::kAufbauDegenerate, std::move(p));
  } catch (const NonphysicalDensity&) {
    return builder.finish(Termination::kNonphysical, std::move(p));
  }
  return builder.finish(Termination::kMaxIterations, std::move(p));
}

SolverTrace damped_scf_nonretracted(const EnergyModel& model, const Matrix& p0,
                                    const SolverConfig& config) {
  config.validate();
  checked_integer_trace(p0, "damped_scf_nonretracted");
  TraceBuilder builder(config);
  Matrix p = p0;

  try {
    Matrix phi = scf_target(model, p, config.aufbau_mode, p,
                            config.gap_tolerance).matrix();
    double residual = (phi - p).norm();
    builder.set_initial(p, model.energy(p), residual);
    if (criterion_met(config, residual, distance_or_nan(config, p))) {
      return builder.finish(Termination::kConverged, std::move(p));
    }
    for (int k = 0; k < config.max_iterations; ++k) {
      Matrix next = p + config.beta * (phi - p);
      phi = scf_target(model, next, config.aufbau_mode, next,
                       config.gap_tolerance).matrix();
      residual = (phi - next).norm();
      const double step = (next - p).norm();
      p = std::move(next);
      builder.push(p, model.energy(p), residual, step);
      if (criterion_met(config, residual, distance_or_nan(config, p))) {
        return builder.finish(Termination::kConverged, std::move(p));
      }
    }
  } catch (const AufbauDegenerate&) {
    return builder.finish(Termination::kAufbauDegenerate, std::move(p));
  } catch (const NonphysicalDensity&) {
    return builder.finish(Termination::kNonphysical, std::move(p));
  }
  return builder.finish(Termination::kMaxIterations, std::move(p));
}

SolverTrace roothaan_scf(const EnergyModel& model, const DensityMatrix& p0,
                         const SolverConfig& config) {
  config.validate();
  SolverConfig recording = config;
  recording.record_iterates = true;  // the oscillations are the point
  TraceBuilder builder(recording);
  Matrix p = p0.matrix();

  try {
    Matrix phi = scf_target(model, p, config.aufbau_mode, p,
                            config.gap_tolerance).matrix();
    // A 2-cycle keeps ||Phi(P) - P|| large, so this residual cannot flag one
    // as converged.
    double residual = (phi - p).norm();
    builder.set_initial(p, model.energy(p), residual);
    if (criterion_met(config, residual, distance_or_nan(config, p))) {
      return builder.finish(Termination::kConverged, std::move(p));
    }
    for (int k = 0; k < config.max_iterations; ++k) {
      Matrix next = phi;
      phi = scf_target(model, next, config.aufbau_mode, next,
                       config.gap_tolerance).matrix();
      residual = (phi - next).norm();
      const double step = (next - p).norm();
      p = std::move(next);
      builder.push(p, model.energy(p), residual, step);
      if (criterion_met(config, residual, distance_or_nan(config, p))) {
        return builder.finish(Termination::kConverged, std::move(p));
      }
    }
  } catch (const AufbauDegenerate&) {
    return builder.finish(Termination::kAufbauDegenerate, std::move(p));
  } catch (const NonphysicalDensity&) {
    return builder.finish(Termination::kNonphysical, std::move(p));
  }
  return builder.finish(Termination::kMaxIterations, std::move(p));
}

namespace {

/// Best filling of the two Fermi levels, one unit of charge on the block
/// Q(t, b) = [[t, b], [b, 1 - t]] over (phi_h, phi_l): a two-variable
/// quadratic program over the disc (t - 1/2)^2 + b^2 <= 1/4 (the PSD <= 1
/// constraint of the block). Exact for models that are quadratic along
/// segments; the boundary search below covers the rest. Solving the block as
/// a whole keeps the result invariant under rotations of a degenerate
/// eigenbasis, which a diagonal-only filling is not.
Matrix fermi_block_target(const EnergyModel& model,
                          const SpectralDecomposition& dec, int n) {
  const auto below = dec.eigenvectors.leftCols(n - 1);
  const auto phi_h = dec.eigenvectors.col(n - 1);
  const auto phi_l = dec.eigenvectors.col(n);
  const Matrix p_h = phi_h * phi_h.transpose();
  const Matrix p_l = phi_l * phi_l.transpose();
  Matrix cross = phi_h * phi_l.transpose();
  cross += Matrix(cross.transpose());
  const Matrix c0 = below * below.transpose() + p_l;  // filling (0, 1)
  const Matrix a = p_h - p_l;
  const Matrix h0 = model.gradient(c0);
  const double g_t = frobenius_inner(h0, a);
  const double g_b = frobenius_inner(h0, cross);
  const double k_tt = frobenius_inner(a, model.hessian_apply(c0, a));
  const double k_tb = frobenius_inner(a, model.hessian_apply(c0, cross));
  const double k_bb = frobenius_inner(cross, model.hessian_apply(c0, cross));

  auto value = [&](double t, double b) {
    return g_t * t + g_b * b +
           0.5 * (k_tt * t * t + 2.0 * k_tb * t * b + k_bb * b * b);
  };

  double t = 0.0, b = 0.0;
  bool interior = false;
  const double det = k_tt * k_bb - k_tb * k_tb;
  if (det > 1e-14 * (std::abs(k_tt) + std::abs(k_bb)) *
                (std::abs(k_tt) + std::abs(k_bb)) &&
      k_tt > 0.0) {
    t = (-g_t * k_bb + g_b * k_tb) / det;
    b = (-g_b * k_tt + g_t * k_tb) / det;
    const double dt = t - 0.5;
    interior = dt * dt + b * b <= 0.25;
  }
  if (!interior) {
    // Minimum on the circle of projectors of the block: coarse scan for a
    // bracket, then Newton on the analytic angle derivative. Comparing
    // function values alone cannot resolve the angle past sqrt(eps) at a
    // flat quadratic minimum.
    auto on_circle = [&](double theta) {
      return value(0.5 + 0.5 * std::cos(theta), 0.5 * std::sin(theta));
    };
    auto derivative = [&](double theta) {
      const double c = std::cos(theta), s = std::sin(theta);
      const double tt = 0.5 + 0.5 * c, bb = 0.5 * s;
      const double ft = g_t + k_tt * tt + k_tb * bb;
      const double fb = g_b + k_tb * tt + k_bb * bb;
      return -0.5 * s * ft + 0.5 * c * fb;
    };
    auto second_derivative = [&](double theta) {
      const double c = std::cos(theta), s = std::sin(theta);
      const double tt = 0.5 + 0.5 * c, bb = 0.5 * s;
      const double ft = g_t + k_tt * tt + k_tb * bb;
      const double fb = g_b + k_tb * tt + k_bb * bb;
      const double dft = -0.5 * s * k_tt + 0.5 * c * k_tb;
      const double dfb = -0.5 * s * k_tb + 0.5 * c * k_bb;
      return -0.5 * c * ft - 0.5 * s * dft + 0.5 * c * dfb - 0.5 * s * fb;
    };
    const int samples = 128;
    double best_theta = 0.0, best_value = on_circle(0.0);
    for (int s = 1; s < samples; ++s) {
      const double theta = 2.0 * std::numbers::pi * s / samples;
      const double v = on_circle(theta);
      if (v < best_value) {
        best_value = v;
        best_theta = theta;
      }
    }
    const double width = 2.0 * std::numbers::pi / samples;
    double lo = best_theta - width, hi = best_theta + width;
    double theta = best_theta;
    for (int it = 0; it < 60; ++it) {
      const double d1 = derivative(theta);
      const double d2 = second_derivative(theta);
      double next = (d2 > 0.0) ? theta - d1 / d2
                               : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      (derivative(next) < 0.0 ? lo : hi) = next;
      if (std::abs(next - theta) < 1e-15 || hi - lo < 1e-15) {
        theta = next;
        break;
      }
      theta = next;
    }
    t = 0.5 + 0.5 * std::cos(theta);
    b = 0.5 * std::sin(theta);
  }
  return c0 + t * a + b * cross;
}

/// Indices of the eigenvalue cluster containing the Fermi level: all k with
/// eps_k within gap_tolerance of eps_N or eps_{N+1} (transitively).
std::pair<int, int> fermi_cluster(const Vector& eps, int n,
                                  double gap_tolerance) {
  if (n >= eps.size() || eps[n] - eps[n - 1] > gap_tolerance) {
    return {n, n};  // empty cluster [n, n)
  }
  int lo = n - 1;
  while (lo > 0 && eps[lo] - eps[lo - 1] <= gap_tolerance) --lo;
  int hi = n + 1;
  while (hi < eps.size() && eps[hi] - eps[hi - 1] <= gap_tolerance) ++hi;
  return {lo, hi};  // cluster is [lo, hi)
}

struct OdaDirections {
  Matrix vertex;              // integer aufbau filling
  std::optional<Matrix> equal_fill;  // degenerate cluster filled evenly
  bool degenerate = false;
  int cluster_lo = 0, cluster_hi = 0;
};

OdaDirections oda_directions(const SpectralDecomposition& dec, int n,
                             double gap_tolerance) {
  OdaDirections dirs;
  dirs.vertex = dec.occupied_projector();
  const auto [lo, hi] = fermi_cluster(dec.eigenvalues, n, gap_tolerance);
  dirs.cluster_lo = lo;
  dirs.cluster_hi = hi;
  if (hi > lo) {
    dirs.degenerate = true;
    const int d = hi - lo;
    const double share = static_cast<double>(n - lo) / d;
    const auto below = dec.eigenvectors.leftCols(lo);
    const auto cluster = dec.eigenvectors.middleCols(lo, d);
    dirs.equal_fill = below * below.transpose() +
                      share * (cluster * cluster.transpose());
  }
  return dirs;
}

}  // namespace

std::pair<OccupationState, SolverTrace> oda(const EnergyModel& model,
                                            const Matrix& p0,
                                            const SolverConfig& config) {
  config.validate();
  const int n = checked_integer_trace(p0, "oda");
  {
    // The start must lie in the convex hull: spectrum within [0, 1].
    const SpectralDecomposition dec = spectral_decompose(p0, n);
    if (dec.eigenvalues.minCoeff() < -1e-8 ||
        dec.eigenvalues.maxCoeff() > 1.0 + 1e-8) {
      throw Error("oda: starting point is outside the convex hull");
    }
  }
  const bool quadratic = is_quadratic_along_segments(model);

  TraceBuilder builder(config);
  Matrix d = p0;
  Termination verdict = Termination::kMaxIterations;

  try {
    {
      const Matrix h = model.gradient(d);
      const SpectralDecomposition dec = spectral_decompose(h, n);
      const OdaDirections dirs = oda_directions(dec, n, config.gap_tolerance);
      const double fw_gap = frobenius_inner(h, d - dirs.vertex);
      builder.set_initial(d, model.energy(d), fw_gap);
    }
    for (int k = 0; k < config.max_iterations; ++k) {
      const Matrix h = model.gradient(d);
      const SpectralDecomposition dec = spectral_decompose(h, n);
      const OdaDirections dirs = oda_directions(dec, n, config.gap_tolerance);
      const double fw_gap = frobenius_inner(h, d - dirs.vertex);

      // Candidate steps, largest energy decrease wins. For models that are
      // quadratic along segments the decrease is evaluated in closed form;
      // differencing computed energies instead would drown tail steps in
      // round-off of the large linear term.
      Matrix best;
      double best_change = std::numeric_limits<double>::infinity();
      auto consider = [&](const Matrix& candidate) {
        const Matrix delta = candidate - d;
        double change;
        if (quadratic) {
          change = frobenius_inner(h, delta) +
                   0.5 * frobenius_inner(delta, model.hessian_apply(d, delta));
        } else {
          change = model.energy(candidate) - model.energy(d);
        }
        if (change < best_change) {
          best_change = change;
          best = candidate;
        }
      };
      {
        const Matrix dir = dirs.vertex - d;
        consider(d + line_search_lambda(model, d, dir) * dir);
      }
      if (dirs.degenerate) {
        const Matrix dir = *dirs.equal_fill - d;
        consider(d + line_search_lambda(model, d, dir) * dir);
      }
      if (n < model.dim()) {
        // Block-optimal filling of the Fermi pair: keep the other orbitals of
        // H(D) and put one unit of charge on the best mixed state of the
        // highest occupied and lowest virtual level. With a clean gap the
        // optimum sits on the aufbau vertex and this collapses onto the
        // vertex direction; when the gap closes it resolves the fractional
        // filling that plain aufbau directions only reach with a sublinear
        // tail.
        try {
          const Matrix target = fermi_block_target(model, dec, n);
          consider(target);
          const Matrix toward = target - d;
          consider(d + line_search_lambda(model, d, toward) * toward);
        } catch (const NonphysicalDensity&) {
          // The trial filling left the model's domain; the plain directions
          // above still make progress.
        }
      }
      const double step = (best - d).norm();
      d = best;
      builder.push(d, model.energy(d), fw_gap, step);
      if (step <= config.tolerance) {
        verdict = Termination::kConverged;
        break;
      }
    }

    if (verdict == Termination::kConverged && quadratic && n < model.dim()) {
      // Polish phase: the descent loop stalls once energy slopes drop under
      // the round-off of Frobenius products with the large core matrix,
      // which still leaves the density O(sqrt) of that away from the fixed
      // point. Damped iteration toward the block-optimal target is a plain
      // contraction there and reaches the self-consistency conditions to
      // machine precision. Step growth halves the damping and restarts from
      // the best iterate seen.
      const int budget = std::min(
          2000, config.max_iterations - static_cast<int>(
                    builder.trace.records.size()));
      double lambda = 0.5;
      Matrix best = d;
      double best_step = std::numeric_limits<double>::infinity();
      double prev_step = std::numeric_limits<double>::infinity();
      for (int k = 0; k < budget && lambda >= 1.0 / 64.0; ++k) {
        const SpectralDecomposition dec =
            spectral_decompose(model.gradient(d), n);
        const Matrix target = fermi_block_target(model, dec, n);
        const Matrix next = d + lambda * (target - d);
        const double step = (next - d).norm();
        if (step < best_step) {
          best_step = step;
          best = next;
        }
        if (step > 4.0 * prev_step && step > 1e-13) {
          lambda *= 0.5;
          d = best;
          prev_step = std::numeric_limits<double>::infinity();
          continue;
        }
        prev_step = step;
        d = next;
        if (step <= 1e-14 * model.dim()) break;
      }
      if (best_step < std::numeric_limits<double>::infinity()) {
        d = best;
        const Matrix h = model.gradient(d);
        const SpectralDecomposition dec = spectral_decompose(h, n);
        const OdaDirections dirs = oda_directions(dec, n, config.gap_tolerance);
        builder.push(d, model.energy(d),
                     frobenius_inner(h, d - dirs.vertex), best_step);
      }
    }
  } catch (const NonphysicalDensity&) {
    verdict = Termination::kNonphysical;
  }

  // Occupations read off in the eigenbasis of the final Hamiltonian; at a
  // fixed point [H, D] = 0 so this is exact.
  const SpectralDecomposition dec = spectral_decompose(model.gradient(d), n);
  OccupationState state;
  state.orbitals = dec.eigenvectors;
  state.occupations = Vector(dec.eigenvalues.size());
  for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) {
    const double f = dec.eigenvectors.col(k).dot(d * dec.eigenvectors.col(k));
    state.occupations[k] = std::clamp(f, 0.0, 1.0);
  }
  state.fermi_level = (n < model.dim())
                          ? 0.5 * (dec.eigenvalues[n - 1] + dec.eigenvalues[n])
                          : dec.eigenvalues[n - 1];
  SolverTrace trace = builder.finish(verdict, std::move(d));
  return {std::move(state), std::move(trace)};
}

SolverTrace anderson_mixing(const EnergyModel& model, const Matrix& p0,
                            const SolverConfig& config) {
  config.validate();
  checked_integer_trace(p0, "anderson_mixing");
  TraceBuilder builder(config);
  Matrix p = p0;

  struct HistoryEntry {
    Matrix p;
    Matrix r;  // beta * (Phi(P) - P)
  };
  std::deque<HistoryEntry> history;

  try {
    Matrix phi = scf_target(model, p, config.aufbau_mode, p,
                            config.gap_tolerance).matrix();
    double residual = (phi - p).norm();
    builder.set_initial(p, model.energy(p), residual);
    if (criterion_met(config, residual, distance_or_nan(config, p))) {
      return builder.finish(Termination::kConverged, std::move(p));
    }
    for (int k = 0; k < config.max_iterations; ++k) {
      const Matrix r = config.beta * (phi - p);
      history.push_back({p, r});
      while (static_cast<int>(history.size()) >
             std::max(config.anderson_depth + 1, 1)) {
        history.pop_front();
      }

      Matrix next;
      bool mixed = false;
      const int q = static_cast<int>(history.size());
      if (config.anderson_depth > 0 && q >= 2) {
        // Minimize ||sum c_i r_i|| subject to sum c_i = 1.
        Matrix kkt = Matrix::Zero(q + 1, q + 1);
        double scale = 0.0;
        for (int i = 0; i < q; ++i) {
          for (int j = 0; j < q; ++j) {
            kkt(i, j) = frobenius_inner(history[i].r, history[j].r);
          }
          scale = std::max(scale, kkt(i, i));
        }
        if (scale == 0.0) scale = 1.0;
        for (int i = 0; i < q; ++i) {
          kkt(i, i) += config.anderson_regularization * scale;
          kkt(i, q) = 1.0;
          kkt(q, i) = 1.0;
        }
        Vector rhs = Vector::Zero(q + 1);
        rhs[q] = 1.0;
        Eigen::FullPivLU<Matrix> lu(kkt);
        if (lu.rank() == q + 1) {
          const Vector coeff = lu.solve(rhs);
          if (coeff.allFinite()) {
            next = Matrix::Zero(p.rows(), p.cols());
            for (int i = 0; i < q; ++i) {
              next += coeff[i] * (history[i].p + history[i].r);
            }
            mixed = true;
          }
        }
      }
      if (!mixed) {
        next = p + config.beta * (phi - p);
      }

      phi = scf_target(model, next, config.aufbau_mode, next,
                       config.gap_tolerance).matrix();
      residual = (phi - next).norm();
      const double step = (next - p).norm();
      p = std::move(next);
      builder.push(p, model.energy(p), residual, step);
      if (criterion_met(config, residual, distance_or_nan(config, p))) {
        return builder.finish(Termination::kConverged, std::move(p));
      }
    }
  } catch (const AufbauDegenerate&) {
    return builder.finish(Termination::kAufbauDegenerate, std::move(p));
  } catch (const NonphysicalDensity&) {
    return builder.finish(Termination::kNonphysical, std::move(p));
  }
  return builder.finish(Termination::kMaxIterations, std::move(p));
}

}  // namespace projopt
