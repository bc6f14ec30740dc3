#pragma once

#include <utility>

#include "projopt/manifold.hpp"
#include "projopt/types.hpp"

namespace projopt {

/// A twice differentiable energy functional on symmetric matrices, defined on
/// the full matrix space so that solvers may iterate off the manifold.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual int dim() const = 0;
  virtual double energy(const Matrix& p) const = 0;

  /// Mean-field Hamiltonian H(P), the Frobenius gradient of the energy.
  virtual Matrix gradient(const Matrix& p) const = 0;

  /// Hessian-vector product: the derivative of the gradient along X.
  virtual Matrix hessian_apply(const Matrix& p, const Matrix& x) const = 0;

  /// Model-specific density vector extracted from P.
  virtual Vector density(const Matrix& p) const = 0;
};

/// E(P) = tr((P - M)^2) with M = [[1, eps], [eps, 0]]. The parameter tunes the
/// spectral gap at the minimizer, which closes as eps -> 0.
class ToyGapModel : public EnergyModel {
 public:
  explicit ToyGapModel(double epsilon);

  int dim() const override { return 2; }
  double energy(const Matrix& p) const override;
  Matrix gradient(const Matrix& p) const override;
  Matrix hessian_apply(const Matrix& p, const Matrix& x) const override;
  Vector density(const Matrix& p) const override;

  double epsilon() const { return epsilon_; }
  const Matrix& target() const { return target_; }

 private:
  double epsilon_;
  Matrix target_;
};

/// Three-site mean-field model whose plain self-consistent iteration
/// bifurcates and turns chaotic as the couplings grow:
///   E(P) = tr(hP) + (c1/2) rho^T J rho - c2 sum_j rho_j^{4/3},  rho_j = P_jj,
/// with a fixed core matrix h and J = h^{-1}.
class ChaosModel : public EnergyModel {
 public:
  ChaosModel(double c1, double c2);

  int dim() const override { return 3; }
  double energy(const Matrix& p) const override;
  Matrix gradient(const Matrix& p) const override;
  Matrix hessian_apply(const Matrix& p, const Matrix& x) const override;
  Vector density(const Matrix& p) const override;

  double c1() const { return c1_; }
  double c2() const { return c2_; }
  const Matrix& core() const { return core_; }
  const Matrix& core_inverse() const { return core_inverse_; }

 private:
  /// Densities slightly negative from round-off clamp to zero; anything more
  /// negative leaves the domain of the fractional power.
  Vector checked_density(const Matrix& p) const;

  double c1_;
  double c2_;
  Matrix core_;
  Matrix core_inverse_;
};

/// Periodic 1D Gross-Pitaevskii lattice with an asymmetric double-well
/// potential:
///   E(P) = tr(hP) + (alpha/2) delta sum_i (P_ii/delta)^2,  delta = 1/n_b,
/// h the periodic second-difference stencil plus the potential on the grid.
class GrossPitaevskii1D : public EnergyModel {
 public:
  GrossPitaevskii1D(int n_b, double alpha);

  int dim() const override { return n_b_; }
  double energy(const Matrix& p) const override;
  Matrix gradient(const Matrix& p) const override;
  Matrix hessian_apply(const Matrix& p, const Matrix& x) const override;

  /// Discrete density rho_i = P_ii / delta.
  Vector density(const Matrix& p) const override;

  double alpha() const { return alpha_; }
  double delta() const { return delta_; }
  const Matrix& core() const { return core_; }

  /// The external double-well potential evaluated at x.
  static double potential(double x);

 private:
  int n_b_;
  double alpha_;
  double delta_;
  Matrix core_;
};

/// E(P) = tr(H0 P): the linear eigenvalue problem, zero Hessian.
class LinearModel : public EnergyModel {
 public:
  explicit LinearModel(Matrix h0);

  int dim() const override { return static_cast<int>(h0_.rows()); }
  double energy(const Matrix& p) const override;
  Matrix gradient(const Matrix& p) const override;
  Matrix hessian_apply(const Matrix& p, const Matrix& x) const override;
  Vector density(const Matrix& p) const override;

  const Matrix& h0() const { return h0_; }

 private:
  Matrix h0_;
};

/// Closed-form minimizer of the tunable-gap model together with the spectral
/// gap nu(eps) of the Hamiltonian there.
std::pair<DensityMatrix, double> toy_analytic_minimizer(double epsilon);

}  // namespace projopt
