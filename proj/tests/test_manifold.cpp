#include <doctest.h>

#include <cmath>
#include <random>

#include "projopt/manifold.hpp"

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

}  // namespace

TEST_CASE("tangent projection keeps purely off-diagonal blocks") {
  Matrix p(2, 2);
  p << 1, 0, 0, 0;
  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  const auto t = tangent_project(DensityMatrix(p), x);
  CHECK((t.data - x).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("tangent projection annihilates diagonal blocks") {
  Matrix p(2, 2);
  p << 1, 0, 0, 0;
  Matrix x(2, 2);
  x << 3, 0, 0, -3;
  const auto t = tangent_project(DensityMatrix(p), x);
  CHECK(t.data.norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("tangent projection is idempotent and self-adjoint") {
  std::mt19937_64 rng(11);
  const DensityMatrix p = random_projector(6, 2, 101);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_symmetric(6, rng);
    const Matrix b = random_symmetric(6, rng);
    const Matrix pa = tangent_project_matrix(p.matrix(), a);
    const Matrix ppa = tangent_project_matrix(p.matrix(), pa);
    CHECK((ppa - pa).norm() < 1e-12);
    const double lhs = frobenius_inner(pa, b);
    const double rhs = frobenius_inner(a, tangent_project_matrix(p.matrix(), b));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("tangent vectors have the expected block structure") {
  std::mt19937_64 rng(5);
  const DensityMatrix p = random_projector(5, 2, 77);
  const Matrix x = random_symmetric(5, rng);
  const auto t = tangent_project(p, x);
  const Matrix q = Matrix::Identity(5, 5) - p.matrix();
  CHECK((p.matrix() * t.data * p.matrix()).norm() < 1e-12);
  CHECK((q * t.data * q).norm() < 1e-12);
  CHECK(std::abs(t.data.trace()) < 1e-12);
}

TEST_CASE("tangent projection rejects non-projectors") {
  Matrix p(2, 2);
  p << 0.6, 0.0, 0.0, 0.4;
  CHECK_THROWS_AS(DensityMatrix{p}, NotAProjector);
}

TEST_CASE("retraction is the identity on the manifold") {
  const DensityMatrix p = random_projector(5, 2, 3);
  const DensityMatrix r = retract(p.matrix(), 2);
  CHECK((r.matrix() - p.matrix()).norm() < 1e-12);
}

TEST_CASE("retraction thresholds eigenvalues at one half") {
  Matrix p(2, 2);
  p << 0.9, 0.0, 0.0, 0.1;
  const DensityMatrix r = retract(p, 1);
  Matrix expected(2, 2);
  expected << 1, 0, 0, 0;
  CHECK((r.matrix() - expected).norm() < 1e-14);
}

TEST_CASE("retraction reports rank mismatches") {
  Matrix p(2, 2);
  p << 0.9, 0.0, 0.0, 0.8;
  CHECK_THROWS_AS(retract(p, 1), RetractionRankMismatch);
}

TEST_CASE("retraction is second order accurate along tangents") {
  std::mt19937_64 rng(13);
  const DensityMatrix p = random_projector(6, 2, 29);
  Matrix x = tangent_project_matrix(p.matrix(), random_symmetric(6, rng));
  x /= x.norm();
  // log-log slope of the remainder || R(P + tX) - P - tX || should be 2.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (double t = 1e-4; t <= 1.0001e-2; t *= std::sqrt(10.0)) {
    const DensityMatrix r = retract(p.matrix() + t * x, 2);
    const double remainder = (r.matrix() - p.matrix() - t * x).norm();
    const double lx = std::log(t), ly = std::log(remainder);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("random projectors are deterministic and on the manifold") {
  const DensityMatrix a = random_projector(4, 2, 7);
  const DensityMatrix b = random_projector(4, 2, 7);
  CHECK((a.matrix() - b.matrix()).norm() == 0.0);  // bitwise identical
  const Matrix m = a.matrix();
  CHECK((m * m - m).norm() < 1e-12);
  CHECK(m.trace() == doctest::Approx(2.0).epsilon(1e-12));
  const DensityMatrix c = random_projector(4, 2, 8);
  CHECK((a.matrix() - c.matrix()).norm() > 1e-3);
}

TEST_CASE("full-rank random projector is the identity") {
  const DensityMatrix p = random_projector(2, 2, 123);
  CHECK((p.matrix() - Matrix::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("manifold distance basics") {
  Matrix p(2, 2), q(2, 2);
  p << 1, 0, 0, 0;
  q << 0, 0, 0, 1;
  CHECK(manifold_distance(p, p) == 0.0);
  CHECK(manifold_distance(p, q) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("manifold distance satisfies the triangle inequality") {
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_projector(5, 2, 100 + trial).matrix();
    const Matrix b = random_projector(5, 2, 200 + trial).matrix();
    const Matrix c = random_projector(5, 2, 300 + trial).matrix();
    CHECK(manifold_distance(a, c) <=
          manifold_distance(a, b) + manifold_distance(b, c) + 1e-12);
  }
}

TEST_CASE("spectral decomposition sorts and reconstructs") {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 3, 1, 2;
  const auto dec = spectral_decompose(a, 1);
  CHECK(dec.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(dec.eigenvalues[1] == doctest::Approx(2.0));
  CHECK(dec.eigenvalues[2] == doctest::Approx(3.0));
  // Columns are signed unit vectors of the standard basis.
  for (int j = 0; j < 3; ++j) {
    CHECK(dec.eigenvectors.col(j).cwiseAbs().maxCoeff() ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dec.eigenvectors.col(j).maxCoeff() > 0.0);
  }

  std::mt19937_64 rng(17);
  const Matrix b = random_symmetric(8, rng);
  const auto dec_b = spectral_decompose(b, 3);
  const Matrix rebuilt = dec_b.eigenvectors *
                         dec_b.eigenvalues.asDiagonal() *
                         dec_b.eigenvectors.transpose();
  CHECK((rebuilt - b).norm() < 1e-10 * b.norm());
  CHECK((dec_b.eigenvectors.transpose() * dec_b.eigenvectors -
         Matrix::Identity(8, 8))
            .norm() < 1e-10);
}

TEST_CASE("repeated eigenvalues give a well-defined eigenspace projector") {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 1, 1, 2;
  const auto dec = spectral_decompose(a, 2);
  const Matrix proj = dec.occupied_projector();
  Matrix expected = Matrix::Zero(3, 3);
  expected(0, 0) = expected(1, 1) = 1.0;
  CHECK((proj - expected).norm() < 1e-12);
  CHECK((dec.eigenvectors.transpose() * dec.eigenvectors -
         Matrix::Identity(3, 3))
            .norm() < 1e-10);
}

TEST_CASE("spectral decomposition is deterministic") {
  std::mt19937_64 rng(23);
  const Matrix a = random_symmetric(6, rng);
  const auto d1 = spectral_decompose(a, 2);
  const auto d2 = spectral_decompose(a, 2);
  CHECK((d1.eigenvectors - d2.eigenvectors).norm() == 0.0);
  CHECK((d1.eigenvalues - d2.eigenvalues).norm() == 0.0);
}
