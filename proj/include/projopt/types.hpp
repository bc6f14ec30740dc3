#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace projopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The matrix fails the projector predicate ||P^2-P|| <= tol, |tr P - N| <= tol.
struct NotAProjector : Error {
  using Error::Error;
};

/// The number of eigenvalues above 1/2 does not match the requested rank.
/// Solvers surface this as a step-too-large condition.
struct RetractionRankMismatch : Error {
  using Error::Error;
};

/// The dense eigensolver did not converge.
struct EigensolverFailure : Error {
  using Error::Error;
};

/// eps_{N+1} - eps_N is below the configured gap tolerance, so the lowest-N
/// spectral projector is not well defined.
struct AufbauDegenerate : Error {
  using Error::Error;
};

/// An occupied-virtual eigenvalue difference is too small to invert.
struct GapTooSmall : Error {
  using Error::Error;
};

/// The point handed to a Jacobian assembly is not a critical point.
struct NotCritical : Error {
  using Error::Error;
};

/// Not enough usable iterations to fit a rate.
struct InsufficientData : Error {
  using Error::Error;
};

/// A density entry is negative where a fractional power is required.
struct NonphysicalDensity : Error {
  using Error::Error;
};

/// A 1D line search could not produce a decrease.
struct LineSearchFailure : Error {
  using Error::Error;
};

inline double frobenius_inner(const Matrix& a, const Matrix& b) {
  return (a.array() * b.array()).sum();
}

}  // namespace projopt
