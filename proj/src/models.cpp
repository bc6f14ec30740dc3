#include "projopt/models.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace projopt {

namespace {

void require_dim(const EnergyModel& m, const Matrix& p, const char* what) {
  if (p.rows() != m.dim() || p.cols() != m.dim()) {
    throw Error(std::string(what) + ": dimension mismatch");
  }
}

constexpr double kDensityRoundoff = 1e-14;

}  // namespace

// ---------------------------------------------------------------------------
// ToyGapModel

ToyGapModel::ToyGapModel(double epsilon) : epsilon_(epsilon) {
  if (epsilon < 0.0) throw Error("ToyGapModel: epsilon must be >= 0");
  target_ = Matrix(2, 2);
  target_ << 1.0, epsilon, epsilon, 0.0;
}

double ToyGapModel::energy(const Matrix& p) const {
  require_dim(*this, p, "ToyGapModel::energy");
  const Matrix d = p - target_;
  return (d * d).trace();
}

Matrix ToyGapModel::gradient(const Matrix& p) const {
  require_dim(*this, p, "ToyGapModel::gradient");
  return 2.0 * (p - target_);
}

Matrix ToyGapModel::hessian_apply(const Matrix& p, const Matrix& x) const {
  require_dim(*this, p, "ToyGapModel::hessian_apply");
  return 2.0 * x;
}

Vector ToyGapModel::density(const Matrix& p) const {
  require_dim(*this, p, "ToyGapModel::density");
  return p.diagonal();
}

// ---------------------------------------------------------------------------
// ChaosModel

ChaosModel::ChaosModel(double c1, double c2) : c1_(c1), c2_(c2) {
  if (c1 < 0.0 || c2 < 0.0) throw Error("ChaosModel: couplings must be >= 0");
  core_ = Matrix(3, 3);
  core_ << 1.4299, -0.2839, -0.4056,  //
      -0.2839, 1.1874, 0.2678,        //
      -0.4056, 0.2678, 2.3826;
  // h^{-1} assembled once from the eigendecomposition of h.
  const SpectralDecomposition dec = spectral_decompose(core_, 1);
  core_inverse_ = dec.eigenvectors *
                  dec.eigenvalues.cwiseInverse().asDiagonal() *
                  dec.eigenvectors.transpose();
  core_inverse_ = 0.5 * (core_inverse_ + core_inverse_.transpose());
}

Vector ChaosModel::checked_density(const Matrix& p) const {
  Vector rho = p.diagonal();
  if (c2_ > 0.0) {
    for (Eigen::Index j = 0; j < rho.size(); ++j) {
      if (rho[j] < 0.0) {
        if (rho[j] > -kDensityRoundoff) {
          rho[j] = 0.0;
        } else {
          throw NonphysicalDensity("ChaosModel: negative density entry " +
                                   std::to_string(rho[j]));
        }
      }
    }
  }
  return rho;
}

double ChaosModel::energy(const Matrix& p) const {
  require_dim(*this, p, "ChaosModel::energy");
  const Vector rho = checked_density(p);
  double e = (core_ * p).trace() + 0.5 * c1_ * rho.dot(core_inverse_ * rho);
  if (c2_ > 0.0) {
    for (Eigen::Index j = 0; j < rho.size(); ++j) {
      e -= c2_ * std::pow(rho[j], 4.0 / 3.0);
    }
  }
  return e;
}

Matrix ChaosModel::gradient(const Matrix& p) const {
  require_dim(*this, p, "ChaosModel::gradient");
  const Vector rho = checked_density(p);
  Vector diag = c1_ * (core_inverse_ * rho);
  if (c2_ > 0.0) {
    for (Eigen::Index j = 0; j < rho.size(); ++j) {
      diag[j] -= (4.0 / 3.0) * c2_ * std::cbrt(rho[j]);
    }
  }
  Matrix h = core_;
  h.diagonal() += diag;
  return h;
}

Matrix ChaosModel::hessian_apply(const Matrix& p, const Matrix& x) const {
  require_dim(*this, p, "ChaosModel::hessian_apply");
  const Vector rho = checked_density(p);
  Vector diag = c1_ * (core_inverse_ * x.diagonal());
  if (c2_ > 0.0) {
    for (Eigen::Index j = 0; j < rho.size(); ++j) {
      if (x(j, j) == 0.0) continue;
      if (rho[j] <= 0.0) {
        throw NonphysicalDensity("ChaosModel: Hessian undefined at zero density");
      }
      // d/drho of (4/3) c2 rho^{1/3}; diverges at rho = 0.
      diag[j] -= (4.0 / 9.0) * c2_ * std::pow(rho[j], -2.0 / 3.0) * x(j, j);
    }
  }
  Matrix out = Matrix::Zero(3, 3);
  out.diagonal() = diag;
  return out;
}

Vector ChaosModel::density(const Matrix& p) const {
  require_dim(*this, p, "ChaosModel::density");
  return p.diagonal();
}

// ---------------------------------------------------------------------------
// GrossPitaevskii1D

double GrossPitaevskii1D::potential(double x) {
  constexpr double kDepth = 20.0;  // C
  constexpr double kSharpness = 30.0;  // c
  const double pi = std::numbers::pi;
  const double lobe1 = std::cos(pi * (x - 0.20));
  const double lobe2 = std::cos(pi * (x + 0.25));
  return -kDepth * (std::exp(-kSharpness * lobe1 * lobe1) +
                    2.0 * std::exp(-kSharpness * lobe2 * lobe2));
}

GrossPitaevskii1D::GrossPitaevskii1D(int n_b, double alpha)
    : n_b_(n_b), alpha_(alpha), delta_(1.0 / n_b) {
  if (n_b < 3) throw Error("GrossPitaevskii1D: need n_b >= 3");
  if (alpha < 0.0) throw Error("GrossPitaevskii1D: alpha must be >= 0");
  core_ = Matrix::Zero(n_b_, n_b_);
  const double hop = -1.0 / (2.0 * delta_ * delta_);
  for (int i = 0; i < n_b_; ++i) {
    core_(i, i) = 1.0 / (delta_ * delta_) + potential((i + 1) * delta_);
    const int next = (i + 1) % n_b_;
    core_(i, next) = hop;
    core_(next, i) = hop;
  }
}

double GrossPitaevskii1D::energy(const Matrix& p) const {
  require_dim(*this, p, "GrossPitaevskii1D::energy");
  const double quad = p.diagonal().squaredNorm() / delta_;
  return (core_ * p).trace() + 0.5 * alpha_ * quad;
}

Matrix GrossPitaevskii1D::gradient(const Matrix& p) const {
  require_dim(*this, p, "GrossPitaevskii1D::gradient");
  Matrix h = core_;
  h.diagonal() += (alpha_ / delta_) * p.diagonal();
  return h;
}

Matrix GrossPitaevskii1D::hessian_apply(const Matrix& p, const Matrix& x) const {
  require_dim(*this, p, "GrossPitaevskii1D::hessian_apply");
  Matrix out = Matrix::Zero(n_b_, n_b_);
  out.diagonal() = (alpha_ / delta_) * x.diagonal();
  return out;
}

Vector GrossPitaevskii1D::density(const Matrix& p) const {
  require_dim(*this, p, "GrossPitaevskii1D::density");
  return p.diagonal() / delta_;
}

// ---------------------------------------------------------------------------
// LinearModel

LinearModel::LinearModel(Matrix h0) : h0_(std::move(h0)) {
  if (h0_.rows() != h0_.cols() ||
      (h0_ - h0_.transpose()).norm() > 1e-12 * std::max(h0_.norm(), 1.0)) {
    throw Error("LinearModel: H0 must be square symmetric");
  }
}

double LinearModel::energy(const Matrix& p) const {
  require_dim(*this, p, "LinearModel::energy");
  return (h0_ * p).trace();
}

Matrix LinearModel::gradient(const Matrix& p) const {
  require_dim(*this, p, "LinearModel::gradient");
  return h0_;
}

Matrix LinearModel::hessian_apply(const Matrix& p, const Matrix& x) const {
  require_dim(*this, p, "LinearModel::hessian_apply");
  return Matrix::Zero(h0_.rows(), h0_.cols());
}

Vector LinearModel::density(const Matrix& p) const {
  require_dim(*this, p, "LinearModel::density");
  return p.diagonal();
}

// ---------------------------------------------------------------------------

std::pair<DensityMatrix, double> toy_analytic_minimizer(double epsilon) {
  if (epsilon < 0.0) throw Error("toy_analytic_minimizer: epsilon must be >= 0");
  // a(eps) = (1 - 1/sqrt(1+4 eps^2)) / 2, written in the cancellation-free form.
  const double s = 1.0 + 4.0 * epsilon * epsilon;
  const double a = 2.0 * epsilon * epsilon / (s + std::sqrt(s));
  const double b = std::sqrt(a * (1.0 - a));
  Matrix p(2, 2);
  p << 1.0 - a, b, b, a;
  const double db = b - epsilon;
  const double nu = 4.0 * std::sqrt(a * a + db * db);
  return {DensityMatrix(std::move(p)), nu};
}

}  // namespace projopt
