#pragma once

#include <cstdint>

#include "projopt/types.hpp"

namespace projopt {

/// Validation tolerance for the projector predicate. Looser than solver
/// convergence tolerances, which accumulate round-off over many iterations.
inline constexpr double kManifoldTol = 1e-8;

/// Ordered eigensystem of a symmetric matrix with an occupied/virtual split.
/// Eigenvalues ascend; eigenvector signs follow a fixed convention (largest
/// magnitude entry positive, ties broken by lowest index) so results are
/// reproducible across runs.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;  // column k pairs with eigenvalues[k]
  int occupied_count = 0;

  /// Projector onto the span of the lowest occupied_count eigenvectors.
  Matrix occupied_projector() const;

  /// eps_{N+1} - eps_N; +infinity when every state is occupied.
  double gap() const;
};

/// A symmetric matrix validated as a rank-N orthogonal projector.
class DensityMatrix {
 public:
  /// Throws NotAProjector unless data is symmetric, idempotent up to tol and
  /// has near-integer trace.
  explicit DensityMatrix(Matrix data, double tol = kManifoldTol);

  const Matrix& matrix() const { return data_; }
  int dim() const { return static_cast<int>(data_.rows()); }
  int rank() const { return rank_; }

 private:
  Matrix data_;
  int rank_;
};

/// A member of the tangent space at base: symmetric with vanishing
/// occupied-occupied and virtual-virtual blocks.
struct TangentVector {
  Matrix data;
  Matrix base;  // the projector this vector is tangent at
};

/// Raw kernel of the tangent projection: P X (1-P) + (1-P) X P.
Matrix tangent_project_matrix(const Matrix& p, const Matrix& x);

/// Orthogonal projection of a symmetric matrix onto the tangent space at P.
TangentVector tangent_project(const DensityMatrix& p, const Matrix& x);

/// Maps a symmetric matrix near the manifold back onto it by snapping
/// eigenvalues to {0,1} at the 1/2 threshold. Throws RetractionRankMismatch
/// when the count of eigenvalues above 1/2 differs from n (eigenvalues at
/// exactly 1/2 count as below, which trips the mismatch near the boundary of
/// the retraction's domain).
DensityMatrix retract(const Matrix& p_tilde, int n);

/// Projector onto the column span of an orthonormalized n_b x n Gaussian
/// matrix. Deterministic for a fixed seed.
DensityMatrix random_projector(int n_b, int n, std::uint64_t seed);

/// Frobenius distance ||P - Q||_F.
double manifold_distance(const Matrix& p, const Matrix& q);

/// Dense symmetric eigendecomposition with ascending eigenvalues, the sign
/// convention above and an occupied/virtual split at n.
SpectralDecomposition spectral_decompose(const Matrix& a, int n);

}  // namespace projopt
