#include "projopt/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "projopt/models.hpp"

namespace projopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_header(std::ostream& os, const ExperimentConfig& config) {
  os << "# " << kVersion << "\n";
  for (const auto& [key, value] : config.items()) {
    os << "# " << key << " = " << value << "\n";
  }
}

template <typename Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  jobs = std::clamp(jobs, 1, std::max(count, 1));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (int t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& w : workers) w.join();
}

double rate_or_nan(const SolverTrace& trace, int window) {
  try {
    return observed_rate(trace, window);
  } catch (const Error&) {
    return kNaN;
  }
}

Matrix seeded_tangent_direction(const DensityMatrix& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(p.dim(), p.dim());
  for (int i = 0; i < p.dim(); ++i) {
    for (int j = 0; j < p.dim(); ++j) x(i, j) = gauss(rng);
  }
  x = 0.5 * (x + Matrix(x.transpose()));
  Matrix t = tangent_project_matrix(p.matrix(), x);
  const double norm = t.norm();
  if (norm > 0.0) t /= norm;
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Toy sweep

ToySweepResult run_toy_sweep(const ExperimentConfig& config) {
  config.validate();
  ToySweepResult result;
  result.config = config;
  result.predicted_epsilon_c = std::sqrt(config.beta / 4.0);

  const std::vector<double> grid = config.grid.points();
  // One shared random start for the whole sweep and both solvers.
  const DensityMatrix p0 = random_projector(2, 1, config.seed);

  result.points.resize(2 * grid.size());
  parallel_for(static_cast<int>(grid.size()), config.jobs, [&](int i) {
    const double eps = grid[i];
    const ToyGapModel model(eps);
    const auto [reference, nu] = toy_analytic_minimizer(eps);

    SolverConfig solver;
    solver.beta = config.beta;
    solver.max_iterations = config.max_iterations;
    solver.tolerance = config.tolerance;
    solver.criterion = ConvergenceCriterion::kDistanceToReference;
    solver.reference = reference.matrix();
    solver.gap_tolerance = config.gap_tolerance;

    const SolverTrace grad = gradient_descent(model, p0, solver);
    result.points[2 * i] = {eps, "grad", grad.iterations(), grad.termination,
                            rate_or_nan(grad, config.rate_window)};
    const SolverTrace scf = damped_scf(model, p0, solver);
    result.points[2 * i + 1] = {eps, "scf", scf.iterations(), scf.termination,
                                rate_or_nan(scf, config.rate_window)};
  });
  return result;
}

std::optional<double> ToySweepResult::scf_last_failure() const {
  std::optional<double> found;
  for (const auto& pt : points) {
    if (pt.solver == "scf" && pt.termination != Termination::kConverged) {
      found = pt.epsilon;
    }
  }
  return found;
}

std::optional<double> ToySweepResult::scf_first_success() const {
  for (const auto& pt : points) {
    if (pt.solver == "scf" && pt.termination == Termination::kConverged) {
      return pt.epsilon;
    }
  }
  return std::nullopt;
}

void ToySweepResult::write_csv(std::ostream& os) const {
  write_header(os, config);
  os << "# predicted_epsilon_c = " << fmt(predicted_epsilon_c) << "\n";
  os << "epsilon,solver,iterations,terminated,observed_rate\n";
  for (const auto& pt : points) {
    os << fmt(pt.epsilon) << ',' << pt.solver << ',' << pt.iterations << ','
       << to_string(pt.termination) << ',' << fmt(pt.observed_rate) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Chaos bifurcation

namespace {

/// Minimal cycle length of the density tail, checked over the final
/// comparison window; 0 when nothing at or below the cap repeats.
int detect_period(const std::vector<Vector>& densities, int period_cap,
                  double tolerance) {
  const int m = static_cast<int>(densities.size());
  const int window = std::min(m, 2 * period_cap + 1);
  for (int p = 1; p <= period_cap; ++p) {
    if (p >= window) break;
    double worst = 0.0;
    for (int k = m - window; k + p < m; ++k) {
      worst = std::max(
          worst, (densities[k + p] - densities[k]).cwiseAbs().maxCoeff());
    }
    if (worst < tolerance) return p;
  }
  return 0;
}

}  // namespace

ChaosResult run_chaos_bifurcation(const ExperimentConfig& config) {
  config.validate();
  ChaosResult result;
  result.config = config;
  const std::vector<double> grid = config.grid.points();
  result.points.resize(grid.size());

  parallel_for(static_cast<int>(grid.size()), config.jobs, [&](int i) {
    ChaosPoint& point = result.points[i];
    point.c1 = grid[i];
    point.tail_start = config.chaos_iterations - config.chaos_tail + 1;
    // Published-axis convention: the iteration couplings are twice the sweep
    // values; the first period doubling then sits at c1 = 0.28 for c2 = 0
    // and at c1 = 1.38 for c2 = 1.
    const ChaosModel model(2.0 * grid[i], 2.0 * config.c2);

    SolverConfig solver;
    solver.beta = 1.0;
    solver.max_iterations = config.chaos_iterations;
    solver.tolerance = 1e-300;  // always run the full budget
    solver.gap_tolerance = config.gap_tolerance;

    const DensityMatrix p0 = random_projector(
        3, 1, config.seed ^ static_cast<std::uint64_t>(i));
    SolverTrace trace;
    try {
      trace = roothaan_scf(model, p0, solver);
    } catch (const Error&) {
      point.period = -1;
      point.termination = Termination::kNonphysical;
      point.tail_rho1.assign(config.chaos_tail, kNaN);
      return;
    }
    point.termination = trace.termination;
    if (trace.termination != Termination::kMaxIterations &&
        trace.termination != Termination::kConverged) {
      point.period = -1;
      point.tail_rho1.assign(config.chaos_tail, kNaN);
      return;
    }

    std::vector<Vector> densities;
    densities.reserve(trace.iterates.size());
    for (const auto& p : trace.iterates) densities.push_back(p.diagonal());

    // Tail values over the nominal iteration budget; a run that reached its
    // fixed point early just holds the final state.
    const int last = static_cast<int>(trace.iterates.size()) - 1;
    point.tail_rho1.resize(config.chaos_tail);
    for (int t = 0; t < config.chaos_tail; ++t) {
      const int iteration = point.tail_start + t;  // 1-based update count
      point.tail_rho1[t] = densities[std::min(iteration, last)][0];
    }
    point.period = trace.converged()
                       ? 1
                       : detect_period(densities, config.period_cap,
                                       config.period_tolerance);
  });
  return result;
}

std::optional<double> ChaosResult::last_period1() const {
  std::optional<double> found;
  for (const auto& pt : points) {
    if (pt.period == 1) found = pt.c1;
  }
  return found;
}

std::optional<double> ChaosResult::first_period2() const {
  for (const auto& pt : points) {
    if (pt.period == 2) return pt.c1;
  }
  return std::nullopt;
}

bool ChaosResult::has_period(int period) const {
  return std::any_of(points.begin(), points.end(),
                     [&](const ChaosPoint& pt) { return pt.period == period; });
}

bool ChaosResult::has_aperiodic() const {
  return has_period(0);
}

void ChaosResult::write_csv(std::ostream& os) const {
  write_header(os, config);
  os << "# coupling convention: the iteration uses (2 c1, 2 c2)\n";
  os << "c1,tail_index,rho1,period\n";
  for (const auto& pt : points) {
    for (std::size_t t = 0; t < pt.tail_rho1.size(); ++t) {
      os << fmt(pt.c1) << ',' << (pt.tail_start + static_cast<int>(t)) << ','
         << fmt(pt.tail_rho1[t]) << ',';
      if (pt.period > 0) {
        os << pt.period;
      } else if (pt.period == 0) {
        os << "aperiodic";
      } else {
        os << "failed";
      }
      os << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Rate validation

GpRateResult run_gp_rate(const ExperimentConfig& config) {
  config.validate();
  GpRateResult result;
  result.config = config;

  const GrossPitaevskii1D model(config.n_b, config.alpha);
  const int n = config.n_electrons;
  const DensityMatrix core_state =
      aufbau_projector(model.core(), n, config.gap_tolerance);

  // Reference minimizer, converged well below the Jacobian preconditions.
  SolverConfig tight;
  tight.beta = config.beta_scf;
  tight.max_iterations = config.max_iterations;
  tight.tolerance = 1e-13;
  tight.gap_tolerance = config.gap_tolerance;
  const SolverTrace reference_trace = damped_scf(model, core_state, tight);
  if (!reference_trace.converged()) {
    throw Error("gp_rate: reference solve did not converge");
  }
  const DensityMatrix minimizer(reference_trace.final_p);

  const RateReport grad_report =
      build_jacobian(model, minimizer, JacobianKind::kGradient);
  const RateReport scf_report =
      build_jacobian(model, minimizer, JacobianKind::kScf);
  result.gap = scf_report.gap;
  result.coercivity = grad_report.coercivity;

  const TangentBasis basis =
      build_tangent_basis(minimizer, model.gradient(minimizer.matrix()));
  const Matrix fd_grad = jacobian_fd(
      [&](const DensityMatrix& q) {
        return gradient_step(model, q, config.beta_grad);
      },
      minimizer, basis, config.fd_step);
  const Matrix fd_scf = jacobian_fd(
      [&](const DensityMatrix& q) {
        return damped_scf_step(model, q, config.beta_scf,
                               AufbauMode::kLowestN, config.gap_tolerance);
      },
      minimizer, basis, config.fd_step);
  const double grad_predicted_fd = spectral_radius(fd_grad);
  const double scf_predicted_fd = spectral_radius(fd_scf);
  const double grad_predicted = grad_report.rate_at(config.beta_grad);
  const double scf_predicted = scf_report.rate_at(config.beta_scf);

  const Matrix perturbation =
      seeded_tangent_direction(core_state, config.seed);
  const DensityMatrix perturbed = retract(
      core_state.matrix() + config.perturbation * perturbation, n);

  auto run_pair = [&](const std::string& kind, const DensityMatrix& start) {
    SolverConfig grad_cfg;
    grad_cfg.beta = config.beta_grad;
    grad_cfg.max_iterations = config.max_iterations;
    grad_cfg.tolerance = config.grad_tolerance;
    const SolverTrace grad = gradient_descent(model, start, grad_cfg);
    result.runs.push_back({kind, "grad",
                           rate_or_nan(grad, config.rate_window_grad),
                           grad_predicted_fd, grad_predicted,
                           grad.termination});

    SolverConfig scf_cfg;
    scf_cfg.beta = config.beta_scf;
    scf_cfg.max_iterations = config.max_iterations;
    scf_cfg.tolerance = config.tolerance;
    scf_cfg.gap_tolerance = config.gap_tolerance;
    const SolverTrace scf = damped_scf(model, start, scf_cfg);
    result.runs.push_back({kind, "scf", rate_or_nan(scf, config.rate_window),
                           scf_predicted_fd, scf_predicted, scf.termination});
  };
  run_pair("plain", core_state);
  run_pair("perturbed", perturbed);

  {
    const GpRateRun& plain_scf = result.find("plain", "scf");
    const double margin = 1.0 - plain_scf.predicted_rate_analytic;
    result.scf_plain_anomaly =
        margin > 0.0 && (plain_scf.predicted_rate_analytic -
                         plain_scf.observed_rate) > 0.05 * margin;
  }

  {
    // The one-particle ground-state orbital carries a single sign.
    const SpectralDecomposition dec =
        spectral_decompose(minimizer.matrix(), n);
    const Vector orbital = dec.eigenvectors.col(config.n_b - 1);
    result.orbital_single_signed =
        (orbital.array() > 0.0).all() || (orbital.array() < 0.0).all();
  }

  {
    // Uniqueness of the relaxed density: two independent seeded relaxed runs
    // at strong interaction must agree.
    const GrossPitaevskii1D strong(config.n_b, 30.0);
    SolverConfig oda_cfg;
    oda_cfg.beta = 1.0;
    oda_cfg.max_iterations = config.oda_max_iterations;
    oda_cfg.tolerance = config.oda_tolerance;
    oda_cfg.gap_tolerance = 1e-8;
    const auto [state_a, trace_a] =
        oda(strong, random_projector(config.n_b, 2, config.seed + 101).matrix(),
            oda_cfg);
    const auto [state_b, trace_b] =
        oda(strong, random_projector(config.n_b, 2, config.seed + 202).matrix(),
            oda_cfg);
    result.relaxed_density_agreement =
        (strong.density(trace_a.final_p) - strong.density(trace_b.final_p))
            .cwiseAbs()
            .maxCoeff();
  }
  return result;
}

const GpRateRun& GpRateResult::find(const std::string& start,
                                    const std::string& solver) const {
  for (const auto& run : runs) {
    if (run.start_kind == start && run.solver == solver) return run;
  }
  throw Error("gp_rate: no run " + start + "/" + solver);
}

void GpRateResult::write_csv(std::ostream& os) const {
  write_header(os, config);
  os << "# gap = " << fmt(gap) << "\n";
  os << "# coercivity = " << fmt(coercivity) << "\n";
  os << "# scf_plain_anomaly = " << (scf_plain_anomaly ? "true" : "false")
     << "\n";
  os << "# orbital_single_signed = "
     << (orbital_single_signed ? "true" : "false") << "\n";
  os << "# relaxed_density_agreement = " << fmt(relaxed_density_agreement)
     << "\n";
  os << "start_kind,solver,observed_rate,predicted_rate_fd,"
        "predicted_rate_analytic\n";
  for (const auto& run : runs) {
    os << run.start_kind << ',' << run.solver << ',' << fmt(run.observed_rate)
       << ',' << fmt(run.predicted_rate_fd) << ','
       << fmt(run.predicted_rate_analytic) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Two-particle bifurcation sweep

namespace {

GpBifurcationEntry summarize_limit(const GrossPitaevskii1D& model,
                                   const Matrix& limit, Termination term) {
  GpBifurcationEntry entry;
  entry.termination = term;
  entry.energy = model.energy(limit);
  entry.rho7 = model.density(limit)[6];
  const SpectralDecomposition ham =
      spectral_decompose(model.gradient(limit), 2);
  entry.eps1 = ham.eigenvalues[0];
  entry.eps2 = ham.eigenvalues[1];
  entry.eps3 = ham.eigenvalues[2];
  const SpectralDecomposition occ = spectral_decompose(limit, 2);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < occ.eigenvalues.size(); ++k) {
    const double f = std::clamp(occ.eigenvalues[k], 0.0, 1.0);
    worst = std::max(worst, std::min(f, 1.0 - f));
  }
  entry.max_fractional = worst;
  return entry;
}

}  // namespace

GpBifurcationResult run_gp_bifurcation(const ExperimentConfig& config) {
  config.validate();
  GpBifurcationResult result;
  result.config = config;
  const std::vector<double> grid = config.grid.points();
  result.points.resize(grid.size());

  parallel_for(static_cast<int>(grid.size()), config.jobs, [&](int i) {
    GpBifurcationPoint& point = result.points[i];
    point.alpha = grid[i];
    const GrossPitaevskii1D model(config.n_b, grid[i]);
    const DensityMatrix core_state =
        aufbau_projector(model.core(), config.n_electrons, 1e-13);

    SolverConfig grad_cfg;
    grad_cfg.beta = config.beta_grad;
    grad_cfg.max_iterations = config.max_iterations;
    grad_cfg.tolerance = config.grad_tolerance;
    const SolverTrace grad = gradient_descent(model, core_state, grad_cfg);
    point.grad = summarize_limit(model, grad.final_p, grad.termination);

    SolverConfig oda_cfg;
    oda_cfg.beta = 1.0;
    oda_cfg.max_iterations = config.oda_max_iterations;
    oda_cfg.tolerance = config.oda_tolerance;
    oda_cfg.gap_tolerance = config.gap_tolerance;
    const auto [state, trace] = oda(model, core_state.matrix(), oda_cfg);
    point.oda = summarize_limit(model, trace.final_p, trace.termination);
    point.limit_distance = (grad.final_p - trace.final_p).norm();
  });
  return result;
}

std::optional<std::pair<double, double>> GpBifurcationResult::critical_bracket()
    const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].oda.max_fractional > 1e-6) {
      const double lo = (i == 0) ? points[0].alpha : points[i - 1].alpha;
      return std::make_pair(lo, points[i].alpha);
    }
  }
  return std::nullopt;
}

void GpBifurcationResult::write_csv(std::ostream& os) const {
  write_header(os, config);
  if (const auto bracket = critical_bracket()) {
    os << "# critical_alpha_bracket = [" << fmt(bracket->first) << ", "
       << fmt(bracket->second) << "]\n";
  }
  os << "alpha,solver,energy,rho7,eps1,eps2,eps3,max_fractional\n";
  for (const auto& pt : points) {
    const auto row = [&](const char* solver, const GpBifurcationEntry& e) {
      os << fmt(pt.alpha) << ',' << solver << ',' << fmt(e.energy) << ','
         << fmt(e.rho7) << ',' << fmt(e.eps1) << ',' << fmt(e.eps2) << ','
         << fmt(e.eps3) << ',' << fmt(e.max_fractional) << "\n";
    };
    row("grad", pt.grad);
    row("oda", pt.oda);
  }
}

// ---------------------------------------------------------------------------
// Side-by-side comparison at strong interaction

namespace {

GpCompareEntry characterize(const GrossPitaevskii1D& model,
                            const std::string& solver, const Matrix& limit,
                            Termination term, double gap_tolerance) {
  GpCompareEntry entry;
  entry.solver = solver;
  entry.limit = limit;
  entry.termination = term;
  entry.energy = model.energy(limit);
  entry.density = model.density(limit);
  entry.effective_potential = Vector(model.dim());
  for (int i = 0; i < model.dim(); ++i) {
    entry.effective_potential[i] =
        GrossPitaevskii1D::potential((i + 1) * model.delta()) +
        model.alpha() * entry.density[i];
  }
  const Matrix h = model.gradient(limit);
  const SpectralDecomposition ham = spectral_decompose(h, 2);
  const int keep = std::min(5, model.dim());
  entry.eps_low = ham.eigenvalues.head(keep);
  const SpectralDecomposition occ = spectral_decompose(limit, 2);
  entry.occupations = occ.eigenvalues.reverse();  // descending
  entry.grad_residual = tangent_project_matrix(limit, h).norm();
  entry.commutator_norm = (h * limit - limit * h).norm();
  try {
    const Matrix phi =
        scf_target(model, limit, AufbauMode::kLowestN, limit, gap_tolerance)
            .matrix();
    entry.scf_residual = tangent_project_matrix(limit, phi - limit).norm();
    entry.scf_target_distance = (phi - limit).norm();
  } catch (const AufbauDegenerate&) {
    entry.scf_residual = kNaN;
    entry.scf_target_distance = kNaN;
  }
  for (int k = 0; k < model.dim(); ++k) {
    const auto phi_k = ham.eigenvectors.col(k);
    if (phi_k.dot(limit * phi_k) > 0.5) {
      entry.occupied_ranks.push_back(k + 1);
    }
  }
  return entry;
}

}  // namespace

GpCompareResult run_gp_compare(const ExperimentConfig& config) {
  config.validate();
  GpCompareResult result;
  result.config = config;
  const GrossPitaevskii1D model(config.n_b, config.alpha);
  const int n = config.n_electrons;
  const DensityMatrix core_state =
      aufbau_projector(model.core(), n, config.gap_tolerance);

  SolverConfig grad_cfg;
  grad_cfg.beta = config.beta_grad;
  grad_cfg.max_iterations = config.max_iterations;
  grad_cfg.tolerance = config.grad_tolerance;
  const SolverTrace grad = gradient_descent(model, core_state, grad_cfg);
  result.entries.push_back(characterize(model, "grad", grad.final_p,
                                        grad.termination,
                                        config.gap_tolerance));

  SolverConfig scf_cfg;
  scf_cfg.beta = config.beta_scf;
  scf_cfg.max_iterations = config.max_iterations;
  scf_cfg.tolerance = config.tolerance;
  scf_cfg.gap_tolerance = config.gap_tolerance;
  const SolverTrace scf = damped_scf(model, core_state, scf_cfg);
  result.entries.push_back(characterize(model, "scf", scf.final_p,
                                        scf.termination,
                                        config.gap_tolerance));

  SolverConfig oda_cfg;
  oda_cfg.beta = 1.0;
  oda_cfg.max_iterations = config.oda_max_iterations;
  oda_cfg.tolerance = config.oda_tolerance;
  oda_cfg.gap_tolerance = 1e-8;
  const auto [state, oda_trace] = oda(model, core_state.matrix(), oda_cfg);
  result.entries.push_back(characterize(model, "oda", oda_trace.final_p,
                                        oda_trace.termination,
                                        config.gap_tolerance));

  result.distance_grad_scf = (grad.final_p - scf.final_p).norm();
  result.distance_grad_oda = (grad.final_p - oda_trace.final_p).norm();
  result.distance_scf_oda = (scf.final_p - oda_trace.final_p).norm();
  return result;
}

const GpCompareEntry& GpCompareResult::find(const std::string& solver) const {
  for (const auto& entry : entries) {
    if (entry.solver == solver) return entry;
  }
  throw Error("gp_compare: no entry for " + solver);
}

void GpCompareResult::write_csv(std::ostream& os) const {
  write_header(os, config);
  os << "solver,quantity,index,value\n";
  const auto scalar = [&](const std::string& solver, const char* quantity,
                          double value) {
    os << solver << ',' << quantity << ",0," << fmt(value) << "\n";
  };
  for (const auto& e : entries) {
    for (int i = 0; i < e.density.size(); ++i) {
      os << e.solver << ",density," << (i + 1) << ',' << fmt(e.density[i])
         << "\n";
    }
    for (int i = 0; i < e.effective_potential.size(); ++i) {
      os << e.solver << ",effective_potential," << (i + 1) << ','
         << fmt(e.effective_potential[i]) << "\n";
    }
    for (int k = 0; k < e.eps_low.size(); ++k) {
      os << e.solver << ",eps," << (k + 1) << ',' << fmt(e.eps_low[k]) << "\n";
    }
    for (int k = 0; k < e.occupations.size(); ++k) {
      os << e.solver << ",occupation," << (k + 1) << ','
         << fmt(e.occupations[k]) << "\n";
    }
    for (std::size_t j = 0; j < e.occupied_ranks.size(); ++j) {
      os << e.solver << ",occupied_rank," << (j + 1) << ','
         << e.occupied_ranks[j] << "\n";
    }
    scalar(e.solver, "energy", e.energy);
    scalar(e.solver, "grad_residual", e.grad_residual);
    scalar(e.solver, "scf_residual", e.scf_residual);
    scalar(e.solver, "scf_target_distance", e.scf_target_distance);
    scalar(e.solver, "commutator_norm", e.commutator_norm);
  }
  scalar("grad_vs_scf", "distance", distance_grad_scf);
  scalar("grad_vs_oda", "distance", distance_grad_oda);
  scalar("scf_vs_oda", "distance", distance_scf_oda);
}

// ---------------------------------------------------------------------------
// Analyze

AnalyzeResult run_analyze(const ExperimentConfig& config) {
  AnalyzeResult result;
  result.config = config;

  const JacobianKind kind = [&] {
    if (config.analyze_kind == "grad") return JacobianKind::kGradient;
    if (config.analyze_kind == "scf") return JacobianKind::kScf;
    throw Error("analyze: analyze_kind must be grad or scf");
  }();

  if (config.analyze_model == "toy") {
    const ToyGapModel model(config.epsilon);
    const auto [point, nu] = toy_analytic_minimizer(config.epsilon);
    result.report = build_jacobian(model, point, kind);
  } else if (config.analyze_model == "chaos") {
    const ChaosModel model(config.c1, config.c2);
    SolverConfig solver;
    solver.beta = 1.0;
    solver.max_iterations = 100000;
    solver.tolerance = 1e-13;
    const SolverTrace trace = roothaan_scf(
        model, aufbau_projector(model.core(), config.n_electrons, 1e-13),
        solver);
    if (!trace.converged()) {
      throw Error("analyze: the plain iteration did not reach a fixed point");
    }
    result.report =
        build_jacobian(model, DensityMatrix(trace.final_p), kind);
  } else if (config.analyze_model == "gp") {
    const GrossPitaevskii1D model(config.n_b, config.alpha);
    SolverConfig solver;
    solver.beta = config.beta_scf;
    solver.max_iterations = config.max_iterations;
    solver.tolerance = 1e-13;
    const SolverTrace trace = damped_scf(
        model,
        aufbau_projector(model.core(), config.n_electrons,
                         config.gap_tolerance),
        solver);
    if (!trace.converged()) {
      throw Error("analyze: the damped self-consistent solve did not converge");
    }
    result.report =
        build_jacobian(model, DensityMatrix(trace.final_p), kind);
  } else {
    throw Error("analyze: analyze_model must be toy, chaos or gp");
  }
  result.rate_at_beta = result.report.rate_at(config.beta);
  return result;
}

void AnalyzeResult::write_report(std::ostream& os) const {
  write_header(os, config);
  os << "kind = " << (report.kind == JacobianKind::kGradient ? "grad" : "scf")
     << "\n";
  os << "dimension = " << report.jacobian.rows() << "\n";
  os << "lambda_min = " << fmt(report.lambda_min) << "\n";
  os << "lambda_max = " << fmt(report.lambda_max) << "\n";
  os << "spectral_radius = " << fmt(report.spectral_radius) << "\n";
  os << "optimal_beta = " << fmt(report.optimal_beta) << "\n";
  os << "condition_number = " << fmt(report.condition_number) << "\n";
  os << "predicted_rate = " << fmt(report.predicted_rate) << "\n";
  os << "gap = " << fmt(report.gap) << "\n";
  os << "coercivity = " << fmt(report.coercivity) << "\n";
  if (report.kind == JacobianKind::kScf) {
    os << "uniform_coercivity = " << fmt(report.uniform_coercivity) << "\n";
  }
  os << "rate_at_beta = " << fmt(rate_at_beta) << "\n";
}

// ---------------------------------------------------------------------------

std::string run_experiment(const ExperimentConfig& config) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!config.out.empty()) {
    file.open(config.out, std::ios::binary);
    if (!file) throw Error("cannot open output file '" + config.out + "'");
    os = &file;
  }
  std::ostringstream summary;
  switch (config.experiment) {
    case ExperimentKind::kToySweep: {
      const ToySweepResult r = run_toy_sweep(config);
      r.write_csv(*os);
      summary << "toy sweep: " << r.points.size() << " rows";
      if (const auto lo = r.scf_last_failure()) {
        summary << ", scf fails up to eps = " << *lo;
      }
      break;
    }
    case ExperimentKind::kChaosBifurcation: {
      const ChaosResult r = run_chaos_bifurcation(config);
      r.write_csv(*os);
      summary << "chaos sweep: " << r.points.size() << " points";
      if (const auto p2 = r.first_period2()) {
        summary << ", first period-2 at c1 = " << *p2;
      }
      break;
    }
    case ExperimentKind::kGpRate: {
      const GpRateResult r = run_gp_rate(config);
      r.write_csv(*os);
      summary << "rate study: plain-start scf anomaly "
              << (r.scf_plain_anomaly ? "present" : "absent");
      break;
    }
    case ExperimentKind::kGpBifurcation: {
      const GpBifurcationResult r = run_gp_bifurcation(config);
      r.write_csv(*os);
      summary << "bifurcation sweep: " << r.points.size() << " points";
      if (const auto bracket = r.critical_bracket()) {
        summary << ", critical alpha in [" << bracket->first << ", "
                << bracket->second << "]";
      }
      break;
    }
    case ExperimentKind::kGpCompare: {
      const GpCompareResult r = run_gp_compare(config);
      r.write_csv(*os);
      summary << "comparison: pairwise limit distances " << r.distance_grad_scf
              << " / " << r.distance_grad_oda << " / " << r.distance_scf_oda;
      break;
    }
    case ExperimentKind::kAnalyze: {
      const AnalyzeResult r = run_analyze(config);
      r.write_report(*os);
      summary << "analyze: spectral radius " << r.report.spectral_radius;
      break;
    }
  }
  return summary.str();
}

}  // namespace projopt
