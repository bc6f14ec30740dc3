#include "projopt/manifold.hpp"

#include <Eigen/Dense>
#include <lapacke.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace projopt {

namespace {

void require_symmetric(const Matrix& a, const char* what) {
  const double scale = std::max(a.norm(), 1.0);
  if ((a - a.transpose()).norm() > 1e-12 * scale) {
    throw NotAProjector(std::string(what) + ": matrix is not symmetric");
  }
}

}  // namespace

Matrix SpectralDecomposition::occupied_projector() const {
  const auto occ = eigenvectors.leftCols(occupied_count);
  return occ * occ.transpose();
}

double SpectralDecomposition::gap() const {
  if (occupied_count < 1 || occupied_count >= eigenvalues.size()) {
    return std::numeric_limits<double>::infinity();
  }
  return eigenvalues[occupied_count] - eigenvalues[occupied_count - 1];
}

DensityMatrix::DensityMatrix(Matrix data, double tol) : data_(std::move(data)) {
  require_symmetric(data_, "DensityMatrix");
  const double idem = (data_ * data_ - data_).norm();
  if (idem > tol) {
    throw NotAProjector("DensityMatrix: ||P^2 - P|| = " + std::to_string(idem));
  }
  const double tr = data_.trace();
  rank_ = static_cast<int>(std::lround(tr));
  if (std::abs(tr - rank_) > tol || rank_ < 0 || rank_ > data_.rows()) {
    throw NotAProjector("DensityMatrix: trace " + std::to_string(tr) +
                        " is not a valid rank");
  }
}

Matrix tangent_project_matrix(const Matrix& p, const Matrix& x) {
  const Matrix px = p * x;
  const Matrix pxp = px * p;
  // P X (1-P) + (1-P) X P = P X + X P - 2 P X P for symmetric inputs.
  return px + px.transpose() - 2.0 * pxp;
}

TangentVector tangent_project(const DensityMatrix& p, const Matrix& x) {
  require_symmetric(x, "tangent_project");
  return TangentVector{tangent_project_matrix(p.matrix(), x), p.matrix()};
}

DensityMatrix retract(const Matrix& p_tilde, int n) {
  require_symmetric(p_tilde, "retract");
  const SpectralDecomposition dec = spectral_decompose(p_tilde, n);
  const auto& vals = dec.eigenvalues;
  int above = 0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (std::abs(vals[i] - 0.5) <= 1e-12) {
      throw RetractionRankMismatch("retract: eigenvalue at the 1/2 threshold");
    }
    if (vals[i] > 0.5) ++above;
  }
  if (above != n) {
    throw RetractionRankMismatch(
        "retract: " + std::to_string(above) + " eigenvalues above 1/2, expected " +
        std::to_string(n));
  }
  const auto top = dec.eigenvectors.rightCols(n);
  Matrix p = top * top.transpose();
  p = 0.5 * (p + p.transpose());
  return DensityMatrix(std::move(p));
}

DensityMatrix random_projector(int n_b, int n, std::uint64_t seed) {
  if (n < 1 || n > n_b) {
    throw Error("random_projector: need 1 <= n <= n_b");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(n_b, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n_b; ++i) {
      g(i, j) = gauss(rng);
    }
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ() * Matrix::Identity(n_b, n);
  Matrix p = q * q.transpose();
  p = 0.5 * (p + p.transpose());
  return DensityMatrix(std::move(p));
}

double manifold_distance(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw Error("manifold_distance: dimension mismatch");
  }
  return (p - q).norm();
}

SpectralDecomposition spectral_decompose(const Matrix& a, int n) {
  require_symmetric(a, "spectral_decompose");
  SpectralDecomposition dec;
  // Divide-and-conquer LAPACK solver: the tightly clustered spectra produced
  // by near-projectors routinely stall Eigen's QR iteration.
  const lapack_int dim = static_cast<lapack_int>(a.rows());
  Matrix work = 0.5 * (a + Matrix(a.transpose()));
  Vector vals(dim);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', dim,
                                         work.data(), dim, vals.data());
  if (info == 0) {
    dec.eigenvalues = std::move(vals);
    dec.eigenvectors = std::move(work);
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success) {
      throw EigensolverFailure("spectral_decompose: iteration did not converge");
    }
    dec.eigenvalues = solver.eigenvalues();
    dec.eigenvectors = solver.eigenvectors();
  }
  dec.occupied_count = n;
  // Sign convention: largest-magnitude entry positive, first such entry wins.
  for (Eigen::Index j = 0; j < dec.eigenvectors.cols(); ++j) {
    Eigen::Index best = 0;
    double best_abs = 0.0;
    for (Eigen::Index i = 0; i < dec.eigenvectors.rows(); ++i) {
      const double v = std::abs(dec.eigenvectors(i, j));
      if (v > best_abs) {
        best_abs = v;
        best = i;
      }
    }
    if (dec.eigenvectors(best, j) < 0.0) {
      dec.eigenvectors.col(j) *= -1.0;
    }
  }
  return dec;
}

}  // namespace projopt
