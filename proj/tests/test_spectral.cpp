#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "projopt/models.hpp"
#include "projopt/solvers.hpp"
#include "projopt/spectral.hpp"

using namespace projopt;

namespace {

Matrix random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
  }
  return 0.5 * (a + Matrix(a.transpose()));
}

/// A critical-point setup where H and P commute by construction.
struct CommutingPair {
  DensityMatrix p;
  Matrix h;
};

CommutingPair make_commuting(int n_b, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix basis_src = random_symmetric(n_b, rng);
  const auto dec = spectral_decompose(basis_src, n);
  Vector eps(n_b);
  for (int k = 0; k < n_b; ++k) eps[k] = k + 0.25 * (k % 3);
  const Matrix h =
      dec.eigenvectors * eps.asDiagonal() * dec.eigenvectors.transpose();
  const Matrix p = dec.occupied_projector();
  return {DensityMatrix(0.5 * (p + p.transpose())), 0.5 * (h + h.transpose())};
}

}  // namespace

TEST_CASE("curvature operator eigenrelation on basis elements") {
  const auto [p, h] = make_commuting(6, 2, 51);
  const TangentBasis basis = build_tangent_basis(p, h);
  const Vector omega = basis.omega_eigenvalues();
  for (int k = 0; k < basis.size(); ++k) {
    const TangentVector x{basis.vectors[k], p.matrix()};
    const TangentVector ox = omega_apply(p, h, x);
    CHECK((ox.data - omega[k] * basis.vectors[k]).norm() < 1e-12);
  }
}

TEST_CASE("curvature operator matches the block formula") {
  const auto [p, h] = make_commuting(5, 2, 7);
  std::mt19937_64 rng(3);
  const Matrix x = tangent_project_matrix(p.matrix(), random_symmetric(5, rng));
  const TangentVector tx{x, p.matrix()};
  const TangentVector ox = omega_apply(p, h, tx);
  // Oracle: assemble the blocks in the eigenbasis of H. With
  // X = [0, Xov; Xvo, 0], Omega X = [0, Xov Hvv - Hoo Xov; sym, 0].
  const auto dec = spectral_decompose(h, 2);
  const Matrix v = dec.eigenvectors;
  const Matrix xb = v.transpose() * x * v;
  const Matrix hb = v.transpose() * h * v;
  const int n = 2;
  const int m = 5 - n;
  const Matrix xov = xb.topRightCorner(n, m);
  const Matrix hoo = hb.topLeftCorner(n, n);
  const Matrix hvv = hb.bottomRightCorner(m, m);
  Matrix expected = Matrix::Zero(5, 5);
  expected.topRightCorner(n, m) = xov * hvv - hoo * xov;
  expected.bottomLeftCorner(m, n) = expected.topRightCorner(n, m).transpose();
  expected = v * expected * v.transpose();
  CHECK((ox.data - expected).norm() < 1e-10);

  const TangentVector zero{Matrix::Zero(5, 5), p.matrix()};
  CHECK(omega_apply(p, h, zero).data.norm() == 0.0);
}

TEST_CASE("curvature operator inverts cleanly away from degeneracy") {
  const auto [p, h] = make_commuting(6, 2, 19);
  std::mt19937_64 rng(4);
  const Matrix x = tangent_project_matrix(p.matrix(), random_symmetric(6, rng));
  const TangentVector tx{x, p.matrix()};
  const TangentVector inv = omega_inverse_apply(p, h, tx, 1e-10);
  const TangentVector roundtrip = omega_apply(p, h, inv);
  CHECK((roundtrip.data - x).norm() < 1e-10);

  const TangentBasis basis = build_tangent_basis(p, h);
  const Vector omega = basis.omega_eigenvalues();
  const TangentVector b0{basis.vectors[0], p.matrix()};
  const TangentVector ib0 = omega_inverse_apply(p, h, b0, 1e-10);
  CHECK((ib0.data - basis.vectors[0] / omega[0]).norm() < 1e-12);
}

TEST_CASE("degenerate occupied-virtual pairs are rejected") {
  Matrix h = Matrix::Zero(3, 3);
  h.diagonal() << 0.0, 1.0, 1.0 + 1e-13;
  Matrix p = Matrix::Zero(3, 3);
  p(0, 0) = p(1, 1) = 1.0;  // occupied levels 0 and 1; virtual at 1 + 1e-13
  const DensityMatrix dp(p);
  const TangentVector x{tangent_project_matrix(p, Matrix::Ones(3, 3)), p};
  CHECK_THROWS_AS(omega_inverse_apply(dp, h, x, 1e-10), GapTooSmall);
}

TEST_CASE("tunable-gap model Jacobians match the closed forms") {
  for (double eps : {0.05, 0.1, 0.5}) {
    ToyGapModel model(eps);
    const auto [p, nu] = toy_analytic_minimizer(eps);
    const RateReport scf = build_jacobian(model, p, JacobianKind::kScf);
    REQUIRE(scf.jacobian.rows() == 1);
    CHECK(scf.jacobian(0, 0) ==
          doctest::Approx(1.0 + 2.0 / nu).epsilon(1e-8));
    const RateReport grad = build_jacobian(model, p, JacobianKind::kGradient);
    CHECK(grad.jacobian(0, 0) == doctest::Approx(nu + 2.0).epsilon(1e-8));
    CHECK(grad.coercivity == doctest::Approx(nu + 2.0).epsilon(1e-8));
    CHECK(scf.gap == doctest::Approx(nu).epsilon(1e-10));
  }
}

TEST_CASE("linear model Jacobians reduce to the matrix splitting limits") {
  Matrix h0 = Matrix::Zero(4, 4);
  h0.diagonal() << 1.0, 2.0, 3.5, 9.0;
  LinearModel model(h0);
  const DensityMatrix p = aufbau_projector(h0, 2, 1e-12);
  const RateReport scf = build_jacobian(model, p, JacobianKind::kScf);
  CHECK(scf.k_matrix.norm() == 0.0);
  CHECK((scf.jacobian - Matrix::Identity(scf.jacobian.rows(),
                                         scf.jacobian.cols()))
            .norm() < 1e-12);
  const RateReport grad = build_jacobian(model, p, JacobianKind::kGradient);
  // kappa = (eps_max - eps_min) / (eps_{N+1} - eps_N).
  CHECK(grad.condition_number ==
        doctest::Approx((9.0 - 1.0) / (3.5 - 2.0)).epsilon(1e-10));
  CHECK(grad.optimal_beta ==
        doctest::Approx(2.0 / ((3.5 - 2.0) + (9.0 - 1.0))).epsilon(1e-10));
  const double kappa = grad.condition_number;
  CHECK(grad.predicted_rate ==
        doctest::Approx((kappa - 1.0) / (kappa + 1.0)).epsilon(1e-12));
}

TEST_CASE("Jacobian assembly rejects non-critical points") {
  ToyGapModel model(0.3);
  const DensityMatrix p = random_projector(2, 1, 17);
  CHECK_THROWS_AS(build_jacobian(model, p, JacobianKind::kGradient),
                  NotCritical);
}

TEST_CASE("self-consistent Jacobian equals the matrix splitting") {
  GrossPitaevskii1D model(24, 12.0);
  const DensityMatrix start = aufbau_projector(model.core(), 1, 1e-12);
  SolverConfig config;
  config.beta = 0.5;
  config.max_iterations = 20000;
  config.tolerance = 1e-13;
  auto trace = damped_scf(model, start, config);
  REQUIRE(trace.converged());
  const DensityMatrix p(trace.final_p);

  const RateReport scf = build_jacobian(model, p, JacobianKind::kScf);
  const RateReport grad = build_jacobian(model, p, JacobianKind::kGradient);
  const int dim = scf.jacobian.rows();
  Matrix splitting = Matrix::Identity(dim, dim);
  for (int k = 0; k < dim; ++k) {
    splitting.row(k) += grad.k_matrix.row(k) / grad.omega_eigenvalues[k];
  }
  CHECK((scf.jacobian - splitting).norm() < 1e-10);

  // Symmetry and realness of the assembled operators.
  CHECK((grad.jacobian - grad.jacobian.transpose()).norm() < 1e-10);
  CHECK(scf.max_imag <= 1e-8 * scf.jacobian.norm());
  // At a minimizer of a convex-in-P energy both spectra sit above the safe
  // bounds.
  CHECK(grad.coercivity > 0.0);
  CHECK(scf.lambda_min >= 1.0 - 1e-8);
}

TEST_CASE("finite differences recover the identity map") {
  const auto [p, h] = make_commuting(5, 2, 23);
  const TangentBasis basis = build_tangent_basis(p, h);
  auto identity = [](const DensityMatrix& q) { return q; };
  const Matrix jac = jacobian_fd(identity, p, basis, 1e-6);
  CHECK((jac - Matrix::Identity(basis.size(), basis.size())).norm() < 1e-6);
}

TEST_CASE("finite differences confirm the gradient-step Jacobian") {
  ToyGapModel model(0.2);
  const auto [p, nu] = toy_analytic_minimizer(0.2);
  const double beta = 0.1;
  const TangentBasis basis = build_tangent_basis(p, model.gradient(p.matrix()));
  auto step = [&](const DensityMatrix& q) {
    return gradient_step(model, q, beta);
  };
  const Matrix fd = jacobian_fd(step, p, basis, 1e-6);
  const RateReport grad = build_jacobian(model, p, JacobianKind::kGradient);
  const Matrix expected = Matrix::Identity(basis.size(), basis.size()) -
                          beta * grad.jacobian;
  CHECK((fd - expected).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("spectral radius of small matrices") {
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 0.5, -0.9;
  CHECK(spectral_radius(a) == doctest::Approx(0.9));

  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  CHECK(spectral_radius(rot) == doctest::Approx(1.0));

  std::mt19937_64 rng(2);
  Matrix b = random_symmetric(4, rng);
  const double r = spectral_radius(b);
  Matrix t = Matrix::Random(4, 4);
  t += 5.0 * Matrix::Identity(4, 4);  // well conditioned conjugation
  const Matrix conj = t * b * t.inverse();
  CHECK(spectral_radius(conj) == doctest::Approx(r).epsilon(1e-8));
}

TEST_CASE("observed rate recovers synthetic decay factors") {
  auto make_trace = [](int count, double ratio, double noise) {
    SolverTrace trace;
    double d = 1.0;
    for (int k = 0; k < count; ++k) {
      IterationRecord rec;
      rec.step_distance = d + noise;
      trace.records.push_back(rec);
      d *= ratio;
    }
    return trace;
  };
  CHECK(observed_rate(make_trace(60, 0.7, 0.0), 30) ==
        doctest::Approx(0.7).epsilon(1e-6));
  CHECK(observed_rate(make_trace(40, 0.9, 1e-15), 20) ==
        doctest::Approx(0.9).epsilon(1e-3));
  CHECK(observed_rate(make_trace(30, 1.0, 0.0), 10) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(observed_rate(make_trace(10, 0.5, 0.0), 20),
                  InsufficientData);
  // Sub-round-off distances are ignored entirely.
  auto floor_trace = make_trace(30, 1e-3, 0.0);
  CHECK_THROWS_AS(observed_rate(floor_trace, 20), InsufficientData);
}
