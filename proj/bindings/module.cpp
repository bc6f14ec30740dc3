#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "projopt/manifold.hpp"
#include "projopt/models.hpp"
#include "projopt/solvers.hpp"
#include "projopt/spectral.hpp"

namespace py = pybind11;
using namespace projopt;

namespace {

SolverConfig config_from_kwargs(double beta, int max_iterations,
                                double tolerance, const std::string& criterion,
                                std::optional<Matrix> reference,
                                const std::string& aufbau_mode,
                                double gap_tolerance, std::uint64_t seed,
                                int anderson_depth, bool record_iterates) {
  SolverConfig c;
  c.beta = beta;
  c.max_iterations = max_iterations;
  c.tolerance = tolerance;
  if (criterion == "residual_norm") {
    c.criterion = ConvergenceCriterion::kResidualNorm;
  } else if (criterion == "distance_to_reference") {
    c.criterion = ConvergenceCriterion::kDistanceToReference;
  } else {
    throw Error("unknown convergence criterion: " + criterion);
  }
  c.reference = std::move(reference);
  if (aufbau_mode == "lowest_n") {
    c.aufbau_mode = AufbauMode::kLowestN;
  } else if (aufbau_mode == "overlap_with_previous") {
    c.aufbau_mode = AufbauMode::kOverlapWithPrevious;
  } else {
    throw Error("unknown aufbau mode: " + aufbau_mode);
  }
  c.gap_tolerance = gap_tolerance;
  c.seed = seed;
  c.anderson_depth = anderson_depth;
  c.record_iterates = record_iterates;
  return c;
}

constexpr auto kConfigArgs = R"(Common solver keywords:
    beta: step / damping parameter in (0, 1]
    max_iterations, tolerance: stopping control
    criterion: "residual_norm" or "distance_to_reference" (needs reference=)
    aufbau_mode: "lowest_n" or "overlap_with_previous"
    gap_tolerance, seed, anderson_depth, record_iterates)";

template <typename Fn>
auto wrap_solver(Fn fn) {
  return [fn](const EnergyModel& model, const Matrix& p0, double beta,
              int max_iterations, double tolerance,
              const std::string& criterion, std::optional<Matrix> reference,
              const std::string& aufbau_mode, double gap_tolerance,
              std::uint64_t seed, int anderson_depth, bool record_iterates) {
    const SolverConfig config = config_from_kwargs(
        beta, max_iterations, tolerance, criterion, std::move(reference),
        aufbau_mode, gap_tolerance, seed, anderson_depth, record_iterates);
    return fn(model, p0, config);
  };
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Solvers and rate analysis for energy minimization over "
            "fixed-rank projector manifolds";

  py::register_exception<NotAProjector>(m, "NotAProjector");
  py::register_exception<RetractionRankMismatch>(m, "RetractionRankMismatch");
  py::register_exception<EigensolverFailure>(m, "EigensolverFailure");
  py::register_exception<AufbauDegenerate>(m, "AufbauDegenerate");
  py::register_exception<GapTooSmall>(m, "GapTooSmall");
  py::register_exception<NotCritical>(m, "NotCritical");
  py::register_exception<InsufficientData>(m, "InsufficientData");
  py::register_exception<NonphysicalDensity>(m, "NonphysicalDensity");
  py::register_exception<LineSearchFailure>(m, "LineSearchFailure");

  // --- manifold -----------------------------------------------------------
  py::class_<SpectralDecomposition>(m, "SpectralDecomposition")
      .def_readonly("eigenvalues", &SpectralDecomposition::eigenvalues)
      .def_readonly("eigenvectors", &SpectralDecomposition::eigenvectors)
      .def_readonly("occupied_count", &SpectralDecomposition::occupied_count)
      .def("occupied_projector", &SpectralDecomposition::occupied_projector)
      .def("gap", &SpectralDecomposition::gap);

  m.def(
      "tangent_project",
      [](const Matrix& p, const Matrix& x) {
        return tangent_project(DensityMatrix(p), x).data;
      },
      py::arg("p"), py::arg("x"),
      "Orthogonal projection of a symmetric matrix onto the tangent space "
      "at the projector p.");
  m.def(
      "retract",
      [](const Matrix& p_tilde, int n) { return retract(p_tilde, n).matrix(); },
      py::arg("p_tilde"), py::arg("n"),
      "Snap a symmetric matrix near the manifold back onto it.");
  m.def(
      "random_projector",
      [](int n_b, int n, std::uint64_t seed) {
        return random_projector(n_b, n, seed).matrix();
      },
      py::arg("n_b"), py::arg("n"), py::arg("seed"));
  m.def("manifold_distance", &manifold_distance, py::arg("p"), py::arg("q"));
  m.def("spectral_decompose", &spectral_decompose, py::arg("a"), py::arg("n"));

  // --- models -------------------------------------------------------------
  py::class_<EnergyModel>(m, "EnergyModel")
      .def("dim", &EnergyModel::dim)
      .def("energy", &EnergyModel::energy, py::arg("p"))
      .def("gradient", &EnergyModel::gradient, py::arg("p"))
      .def("hessian_apply", &EnergyModel::hessian_apply, py::arg("p"),
           py::arg("x"))
      .def("density", &EnergyModel::density, py::arg("p"));

  py::class_<ToyGapModel, EnergyModel>(m, "ToyGapModel")
      .def(py::init<double>(), py::arg("epsilon"))
      .def_property_readonly("epsilon", &ToyGapModel::epsilon);
  py::class_<ChaosModel, EnergyModel>(m, "ChaosModel")
      .def(py::init<double, double>(), py::arg("c1"), py::arg("c2"))
      .def_property_readonly("c1", &ChaosModel::c1)
      .def_property_readonly("c2", &ChaosModel::c2)
      .def_property_readonly("core", &ChaosModel::core);
  py::class_<GrossPitaevskii1D, EnergyModel>(m, "GrossPitaevskii1D")
      .def(py::init<int, double>(), py::arg("n_b"), py::arg("alpha"))
      .def_property_readonly("alpha", &GrossPitaevskii1D::alpha)
      .def_property_readonly("delta", &GrossPitaevskii1D::delta)
      .def_property_readonly("core", &GrossPitaevskii1D::core)
      .def_static("potential", &GrossPitaevskii1D::potential, py::arg("x"));
  py::class_<LinearModel, EnergyModel>(m, "LinearModel")
      .def(py::init<Matrix>(), py::arg("h0"))
      .def_property_readonly("h0", &LinearModel::h0);

  m.def(
      "toy_analytic_minimizer",
      [](double epsilon) {
        auto [p, nu] = toy_analytic_minimizer(epsilon);
        return py::make_tuple(p.matrix(), nu);
      },
      py::arg("epsilon"),
      "Closed-form minimizer of the tunable-gap model and the spectral gap "
      "there; returns (P, nu).");

  // --- solvers --------------------------------------------------------------
  py::enum_<Termination>(m, "Termination")
      .value("converged", Termination::kConverged)
      .value("max_iter", Termination::kMaxIterations)
      .value("aufbau_degenerate", Termination::kAufbauDegenerate)
      .value("retraction_failure", Termination::kRetractionFailure)
      .value("nonphysical", Termination::kNonphysical)
      .value("line_search_failure", Termination::kLineSearchFailure);

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("energy", &IterationRecord::energy)
      .def_readonly("residual", &IterationRecord::residual)
      .def_readonly("step_distance", &IterationRecord::step_distance)
      .def_readonly("distance_to_reference",
                    &IterationRecord::distance_to_reference);

  py::class_<SolverTrace>(m, "SolverTrace")
      .def_readonly("initial", &SolverTrace::initial)
      .def_readonly("records", &SolverTrace::records)
      .def_readonly("termination", &SolverTrace::termination)
      .def_readonly("final_p", &SolverTrace::final_p)
      .def_readonly("iterates", &SolverTrace::iterates)
      .def("iterations", &SolverTrace::iterations)
      .def("converged", &SolverTrace::converged);

  py::class_<OccupationState>(m, "OccupationState")
      .def_readonly("orbitals", &OccupationState::orbitals)
      .def_readonly("occupations", &OccupationState::occupations)
      .def_readonly("fermi_level", &OccupationState::fermi_level)
      .def("assemble", &OccupationState::assemble)
      .def("max_fractional", &OccupationState::max_fractional);

  m.def(
      "aufbau_projector",
      [](const Matrix& h, int n, double gap_tolerance) {
        return aufbau_projector(h, n, gap_tolerance).matrix();
      },
      py::arg("h"), py::arg("n"), py::arg("gap_tolerance") = 1e-12);

  const auto solver_args =
      [](auto&& def) {
        return std::forward<decltype(def)>(def);
      };
  (void)solver_args;

#define PROJOPT_SOLVER_ARGS                                               \
  py::arg("model"), py::arg("p0"), py::kw_only(), py::arg("beta") = 0.1, \
      py::arg("max_iterations") = 10000, py::arg("tolerance") = 1e-10,   \
      py::arg("criterion") = "residual_norm",                            \
      py::arg("reference") = std::nullopt,                               \
      py::arg("aufbau_mode") = "lowest_n",                               \
      py::arg("gap_tolerance") = 1e-12, py::arg("seed") = 0,             \
      py::arg("anderson_depth") = 5, py::arg("record_iterates") = false

  m.def("gradient_descent",
        wrap_solver([](const EnergyModel& model, const Matrix& p0,
                       const SolverConfig& c) {
          return gradient_descent(model, DensityMatrix(p0), c);
        }),
        PROJOPT_SOLVER_ARGS, kConfigArgs);
  m.def("damped_scf",
        wrap_solver([](const EnergyModel& model, const Matrix& p0,
                       const SolverConfig& c) {
          return damped_scf(model, DensityMatrix(p0), c);
        }),
        PROJOPT_SOLVER_ARGS, kConfigArgs);
  m.def("damped_scf_nonretracted",
        wrap_solver([](const EnergyModel& model, const Matrix& p0,
                       const SolverConfig& c) {
          return damped_scf_nonretracted(model, p0, c);
        }),
        PROJOPT_SOLVER_ARGS, kConfigArgs);
  m.def("roothaan_scf",
        wrap_solver([](const EnergyModel& model, const Matrix& p0,
                       const SolverConfig& c) {
          return roothaan_scf(model, DensityMatrix(p0), c);
        }),
        PROJOPT_SOLVER_ARGS, kConfigArgs);
  m.def("oda",
        wrap_solver([](const EnergyModel& model, const Matrix& p0,
                       const SolverConfig& c) { return oda(model, p0, c); }),
        PROJOPT_SOLVER_ARGS, kConfigArgs);
  m.def("anderson_mixing",
        wrap_solver([](const EnergyModel& model, const Matrix& p0,
                       const SolverConfig& c) {
          return anderson_mixing(model, p0, c);
        }),
        PROJOPT_SOLVER_ARGS, kConfigArgs);
#undef PROJOPT_SOLVER_ARGS

  // --- spectral analysis ----------------------------------------------------
  py::enum_<JacobianKind>(m, "JacobianKind")
      .value("grad", JacobianKind::kGradient)
      .value("scf", JacobianKind::kScf);

  py::class_<RateReport>(m, "RateReport")
      .def_readonly("jacobian", &RateReport::jacobian)
      .def_readonly("k_matrix", &RateReport::k_matrix)
      .def_readonly("omega_eigenvalues", &RateReport::omega_eigenvalues)
      .def_readonly("lambda_min", &RateReport::lambda_min)
      .def_readonly("lambda_max", &RateReport::lambda_max)
      .def_readonly("spectral_radius", &RateReport::spectral_radius)
      .def_readonly("optimal_beta", &RateReport::optimal_beta)
      .def_readonly("condition_number", &RateReport::condition_number)
      .def_readonly("predicted_rate", &RateReport::predicted_rate)
      .def_readonly("gap", &RateReport::gap)
      .def_readonly("coercivity", &RateReport::coercivity)
      .def_readonly("uniform_coercivity", &RateReport::uniform_coercivity)
      .def("rate_at", &RateReport::rate_at, py::arg("beta"));

  m.def(
      "build_jacobian",
      [](const EnergyModel& model, const Matrix& p, JacobianKind kind,
         double gap_tolerance) {
        return build_jacobian(model, DensityMatrix(p), kind, gap_tolerance);
      },
      py::arg("model"), py::arg("p"), py::arg("kind"),
      py::arg("gap_tolerance") = 1e-10);
  m.def(
      "omega_apply",
      [](const Matrix& p, const Matrix& h, const Matrix& x) {
        const DensityMatrix dp(p);
        return omega_apply(dp, h, TangentVector{x, p}).data;
      },
      py::arg("p"), py::arg("h"), py::arg("x"));
  m.def(
      "omega_inverse_apply",
      [](const Matrix& p, const Matrix& h, const Matrix& x,
         double gap_tolerance) {
        const DensityMatrix dp(p);
        return omega_inverse_apply(dp, h, TangentVector{x, p}, gap_tolerance)
            .data;
      },
      py::arg("p"), py::arg("h"), py::arg("x"),
      py::arg("gap_tolerance") = 1e-10);
  m.def("spectral_radius", &spectral_radius, py::arg("a"));
  m.def("observed_rate", &observed_rate, py::arg("trace"), py::arg("window"));

  m.attr("__version__") = "0.1.0";
}
