#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "projopt/manifold.hpp"
#include "projopt/models.hpp"
#include "projopt/solvers.hpp"
#include "projopt/types.hpp"

namespace projopt {

/// Orthonormal basis of the tangent space at a critical point, built from the
/// eigenvectors of H(P): B_{ia} = (phi_i phi_a^T + phi_a phi_i^T) / sqrt(2)
/// for occupied i and virtual a. This basis diagonalizes the curvature
/// operator exactly, with eigenvalues eps_a - eps_i.
struct TangentBasis {
  Matrix base;
  SpectralDecomposition hamiltonian;
  std::vector<int> occupied;   // eigenvector indices spanning Ran(P)
  std::vector<int> virtuals;
  std::vector<Matrix> vectors;  // flat index k = i_idx * virtuals.size() + a_idx

  int size() const { return static_cast<int>(vectors.size()); }
  std::pair<int, int> pair_of(int k) const;
  Vector coordinates(const Matrix& x) const;
  Matrix reconstruct(const Vector& coeffs) const;
  /// eps_a - eps_i for each basis element.
  Vector omega_eigenvalues() const;
};

/// Basis of the tangent space at P from the eigenvectors of h; the occupied
/// set is read off from the overlaps with Ran(P), so non-aufbau critical
/// points are handled too.
TangentBasis build_tangent_basis(const DensityMatrix& p, const Matrix& h);

/// Curvature operator X -> -[P, [H, X]]; maps the tangent space at P to
/// itself and acts diagonally on occupied-virtual pairs.
TangentVector omega_apply(const DensityMatrix& p, const Matrix& h,
                          const TangentVector& x);

/// Inverse of the curvature operator, computed by dividing occupied-virtual
/// coefficients by eps_a - eps_i in the eigenbasis of h. Throws GapTooSmall
/// when the smallest such difference is at or below gap_tolerance.
TangentVector omega_inverse_apply(const DensityMatrix& p, const Matrix& h,
                                  const TangentVector& x,
                                  double gap_tolerance);

enum class JacobianKind {
  kGradient,  // J = Omega + K
  kScf,       // J = I + Omega^{-1} K
};

/// Spectral summary of the iteration Jacobian at a critical point, from which
/// asymptotic convergence rates of the fixed-step iterations are predicted.
struct RateReport {
  JacobianKind kind = JacobianKind::kGradient;
  Matrix jacobian;           // assembled on the tangent basis
  Matrix k_matrix;           // projected Hessian on the same basis
  Vector omega_eigenvalues;  // eps_a - eps_i per basis element
  double lambda_min = 0.0;   // smallest eigenvalue of J
  double lambda_max = 0.0;   // largest eigenvalue of J
  double spectral_radius = 0.0;
  double optimal_beta = 0.0;      // 2 / (lambda_min + lambda_max)
  double condition_number = 0.0;  // lambda_max / lambda_min
  double predicted_rate = 0.0;    // (kappa - 1) / (kappa + 1), at optimal beta
  double gap = 0.0;               // nu: smallest eigenvalue of Omega
  double coercivity = 0.0;        // eta: smallest eigenvalue of Omega + K
  /// Smallest eigenvalue of Omega^{-1/2} (Omega + K) Omega^{-1/2}; only
  /// meaningful when Omega is positive (kScf route).
  double uniform_coercivity = 0.0;
  /// Largest imaginary part from the general eigensolver on the assembled
  /// Jacobian; a cross-check that the spectrum is real.
  double max_imag = 0.0;

  /// Spectral radius of 1 - beta * J for the given step.
  double rate_at(double beta) const;
};

/// Assembles the iteration Jacobian column by column on a tangent basis at a
/// critical point of the model (|| Pi_P H(P) || <= 1e-8, else NotCritical).
/// The kScf kind additionally requires a positive occupied-virtual gap.
RateReport build_jacobian(const EnergyModel& model, const DensityMatrix& p,
                          JacobianKind kind, double gap_tolerance = 1e-10);

/// Finite-difference probe of a solver step map around a fixed point:
/// column k holds the tangent coordinates of
///   (f(R(P + h B_k)) - P) / h,
/// or the central variant. Serves as the independent check on the predicted
/// 1 - beta J Jacobians.
Matrix jacobian_fd(
    const std::function<DensityMatrix(const DensityMatrix&)>& step_map,
    const DensityMatrix& p, const TangentBasis& basis, double h_fd = 1e-6,
    bool central = false);

/// Largest eigenvalue modulus of a general square matrix.
double spectral_radius(const Matrix& a);

/// Geometric decay factor of the step-to-step distances over the final
/// `window` usable iterations (distances below 1e-14 are discarded as
/// round-off floor). Throws InsufficientData when fewer than window + 1
/// usable iterations exist.
double observed_rate(const SolverTrace& trace, int window);

}  // namespace projopt
