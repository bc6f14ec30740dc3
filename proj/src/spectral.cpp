#include "projopt/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace projopt {

std::pair<int, int> TangentBasis::pair_of(int k) const {
  const int nv = static_cast<int>(virtuals.size());
  return {occupied[k / nv], virtuals[k % nv]};
}

Vector TangentBasis::coordinates(const Matrix& x) const {
  Vector c(size());
  for (int k = 0; k < size(); ++k) {
    c[k] = frobenius_inner(vectors[k], x);
  }
  return c;
}

Matrix TangentBasis::reconstruct(const Vector& coeffs) const {
  Matrix x = Matrix::Zero(base.rows(), base.cols());
  for (int k = 0; k < size(); ++k) {
    x += coeffs[k] * vectors[k];
  }
  return x;
}

Vector TangentBasis::omega_eigenvalues() const {
  Vector w(size());
  for (int k = 0; k < size(); ++k) {
    const auto [i, a] = pair_of(k);
    w[k] = hamiltonian.eigenvalues[a] - hamiltonian.eigenvalues[i];
  }
  return w;
}

TangentBasis build_tangent_basis(const DensityMatrix& p, const Matrix& h) {
  TangentBasis basis;
  basis.base = p.matrix();
  basis.hamiltonian = spectral_decompose(h, p.rank());
  const int n_b = p.dim();
  for (int k = 0; k < n_b; ++k) {
    const auto phi = basis.hamiltonian.eigenvectors.col(k);
    const double occ = phi.dot(p.matrix() * phi);
    if (occ > 0.5) {
      basis.occupied.push_back(k);
    } else {
      basis.virtuals.push_back(k);
    }
  }
  if (static_cast<int>(basis.occupied.size()) != p.rank()) {
    throw Error(
        "build_tangent_basis: occupied split does not match the rank; "
        "H and P do not commute here");
  }
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i : basis.occupied) {
    const auto phi_i = basis.hamiltonian.eigenvectors.col(i);
    for (int a : basis.virtuals) {
      const auto phi_a = basis.hamiltonian.eigenvectors.col(a);
      Matrix b = phi_i * phi_a.transpose();
      b = inv_sqrt2 * (b + Matrix(b.transpose()));
      basis.vectors.push_back(std::move(b));
    }
  }
  return basis;
}

TangentVector omega_apply(const DensityMatrix& p, const Matrix& h,
                          const TangentVector& x) {
  const Matrix inner = h * x.data - x.data * h;
  const Matrix outer = p.matrix() * inner - inner * p.matrix();
  return TangentVector{-outer, p.matrix()};
}

TangentVector omega_inverse_apply(const DensityMatrix& p, const Matrix& h,
                                  const TangentVector& x,
                                  double gap_tolerance) {
  const TangentBasis basis = build_tangent_basis(p, h);
  const Vector omega = basis.omega_eigenvalues();
  if (basis.size() > 0 && omega.minCoeff() <= gap_tolerance) {
    throw GapTooSmall("omega_inverse_apply: occupied-virtual difference " +
                      std::to_string(omega.minCoeff()));
  }
  Vector coeffs = basis.coordinates(x.data);
  coeffs.array() /= omega.array();
  return TangentVector{basis.reconstruct(coeffs), p.matrix()};
}

double RateReport::rate_at(double beta) const {
  return std::max(std::abs(1.0 - beta * lambda_min),
                  std::abs(1.0 - beta * lambda_max));
}

RateReport build_jacobian(const EnergyModel& model, const DensityMatrix& p,
                          JacobianKind kind, double gap_tolerance) {
  const Matrix h = model.gradient(p.matrix());
  const double residual = tangent_project_matrix(p.matrix(), h).norm();
  if (residual > 1e-8) {
    throw NotCritical("build_jacobian: ||Pi_P H(P)|| = " +
                      std::to_string(residual));
  }
  const TangentBasis basis = build_tangent_basis(p, h);
  const int dim = basis.size();
  if (dim == 0) {
    throw Error("build_jacobian: empty tangent space");
  }
  const Vector omega = basis.omega_eigenvalues();
  if (kind == JacobianKind::kScf && omega.minCoeff() <= gap_tolerance) {
    throw GapTooSmall("build_jacobian: gap " + std::to_string(omega.minCoeff()) +
                      " too small for the self-consistent Jacobian");
  }

  // Projected Hessian K column by column.
  Matrix k_matrix(dim, dim);
  for (int l = 0; l < dim; ++l) {
    const Matrix column = tangent_project_matrix(
        p.matrix(), model.hessian_apply(p.matrix(), basis.vectors[l]));
    k_matrix.col(l) = basis.coordinates(column);
  }

  RateReport report;
  report.kind = kind;
  report.k_matrix = k_matrix;
  report.omega_eigenvalues = omega;
  report.gap = omega.minCoeff();

  const Matrix omega_diag = omega.asDiagonal();
  const Matrix manifold_hessian = omega_diag + k_matrix;
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(
        0.5 * (manifold_hessian + manifold_hessian.transpose()));
    if (es.info() != Eigen::Success) {
      throw EigensolverFailure("build_jacobian: Omega + K eigensolve failed");
    }
    report.coercivity = es.eigenvalues().minCoeff();
  }

  if (kind == JacobianKind::kGradient) {
    report.jacobian = manifold_hessian;
    Eigen::SelfAdjointEigenSolver<Matrix> es(
        0.5 * (manifold_hessian + manifold_hessian.transpose()));
    report.lambda_min = es.eigenvalues().minCoeff();
    report.lambda_max = es.eigenvalues().maxCoeff();
  } else {
    // J = I + Omega^{-1} K; the similar symmetric form
    // I + Omega^{-1/2} K Omega^{-1/2} shares its (real) spectrum.
    Matrix jac(dim, dim);
    for (int k = 0; k < dim; ++k) {
      jac.row(k) = k_matrix.row(k) / omega[k];
    }
    jac += Matrix::Identity(dim, dim);
    report.jacobian = jac;
    const Vector inv_sqrt = omega.cwiseSqrt().cwiseInverse();
    const Matrix sym = Matrix::Identity(dim, dim) +
                       inv_sqrt.asDiagonal() * k_matrix * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sym + sym.transpose()));
    if (es.info() != Eigen::Success) {
      throw EigensolverFailure("build_jacobian: symmetrized eigensolve failed");
    }
    report.lambda_min = es.eigenvalues().minCoeff();
    report.lambda_max = es.eigenvalues().maxCoeff();
    report.uniform_coercivity = report.lambda_min;
  }

  {
    // Cross-check with a general eigensolver; the spectrum must be real.
    Eigen::EigenSolver<Matrix> ges(report.jacobian);
    if (ges.info() == Eigen::Success) {
      report.max_imag = ges.eigenvalues().imag().cwiseAbs().maxCoeff();
    } else {
      report.max_imag = std::numeric_limits<double>::quiet_NaN();
    }
  }

  report.spectral_radius =
      std::max(std::abs(report.lambda_min), std::abs(report.lambda_max));
  report.optimal_beta = 2.0 / (report.lambda_min + report.lambda_max);
  report.condition_number = report.lambda_max / report.lambda_min;
  report.predicted_rate = (report.condition_number - 1.0) /
                          (report.condition_number + 1.0);
  return report;
}

Matrix jacobian_fd(
    const std::function<DensityMatrix(const DensityMatrix&)>& step_map,
    const DensityMatrix& p, const TangentBasis& basis, double h_fd,
    bool central) {
  const DensityMatrix at_p = step_map(p);
  const double drift = (at_p.matrix() - p.matrix()).norm();
  if (drift > 1e-8) {
    throw NotCritical("jacobian_fd: not a fixed point, ||f(P) - P|| = " +
                      std::to_string(drift));
  }
  const int dim = basis.size();
  const int n = p.rank();
  Matrix jac(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const DensityMatrix plus =
        retract(p.matrix() + h_fd * basis.vectors[k], n);
    const Matrix f_plus = step_map(plus).matrix();
    if (central) {
      const DensityMatrix minus =
          retract(p.matrix() - h_fd * basis.vectors[k], n);
      const Matrix f_minus = step_map(minus).matrix();
      jac.col(k) = basis.coordinates((f_plus - f_minus) / (2.0 * h_fd));
    } else {
      jac.col(k) = basis.coordinates((f_plus - p.matrix()) / h_fd);
    }
  }
  return jac;
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw Error("spectral_radius: matrix must be square");
  }
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw EigensolverFailure("spectral_radius: eigensolve failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double observed_rate(const SolverTrace& trace, int window) {
  if (window < 2) {
    throw Error("observed_rate: window must be >= 2");
  }
  std::vector<std::pair<double, double>> usable;  // (iteration index, log d)
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const double d = trace.records[k].step_distance;
    if (std::isfinite(d) && d > 1e-14) {
      usable.emplace_back(static_cast<double>(k), std::log(d));
    }
  }
  if (static_cast<int>(usable.size()) < window + 1) {
    throw InsufficientData("observed_rate: " + std::to_string(usable.size()) +
                           " usable iterations for window " +
                           std::to_string(window));
  }
  const std::size_t start = usable.size() - window;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = start; k < usable.size(); ++k) {
    sx += usable[k].first;
    sy += usable[k].second;
    sxx += usable[k].first * usable[k].first;
    sxy += usable[k].first * usable[k].second;
  }
  const double m = window;
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return std::exp(slope);
}

}  // namespace projopt
