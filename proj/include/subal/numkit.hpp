#pragma once

// Dense linear-algebra kernels: symmetric eigendecomposition, covariance
// summaries, and exact covariance updates under deletion/addition of rows.
//
// Matrices hold one observation per row.  Covariances use 1/n normalization.

#include <cstddef>

#include <Eigen/Dense>

namespace subal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct EigenDecomposition {
  Vector values;   // non-increasing
  Matrix vectors;  // column j pairs with values[j]
};

enum class EigenMethod {
  kJacobi,          // cyclic Jacobi sweeps
  kTridiagonalQr,   // Householder tridiagonalization + implicit QR (Eigen)
  kAuto,            // Jacobi up to kJacobiMaxDim, QR beyond
};

inline constexpr std::ptrdiff_t kJacobiMaxDim = 200;

// Eigendecomposition of a symmetric matrix.  The input is symmetrized as
// (s + s^T)/2.  Eigenvalues come back in non-increasing order (ties keep
// their original index order) and each eigenvector is oriented so that its
// first nonzero component is positive.  Throws kInvalidInput on non-finite
// entries or a non-square matrix.
EigenDecomposition sym_eigen(const Matrix& s, EigenMethod method = EigenMethod::kJacobi);

// Mean and 1/n covariance of a point set.
struct Moments {
  Vector mean;
  Matrix cov;
};

// Throws kDegenerateCluster when x has fewer than two rows.
Moments covariance(const Matrix& x);

// Second-moment matrix (1/n) x^T x with a zero mean; used when subspaces are
// fitted through the origin.
Moments second_moment(const Matrix& x);

// Exact moments of the n - l points left after removing `deleted` from the n
// points summarized by `m`.  Requires 1 <= l <= n - 2, otherwise throws
// kDegenerateCluster.
Moments cov_after_delete(const Moments& m, std::size_t n, const Matrix& deleted);

// Exact moments after appending `added` (l rows) to the n points summarized
// by `m`.  l == 1 goes through the single-point update, l > 1 through the
// block update.
Moments cov_after_add(const Moments& m, std::size_t n, const Matrix& added);

// The two addition updates, exposed separately so they can be checked
// against each other.
Moments cov_after_add_block(const Moments& m, std::size_t n, const Matrix& added);
Moments cov_after_add_point(const Moments& m, std::size_t n, const Vector& x);

// Uncentered counterparts of the updates above, for second-moment summaries.
Moments second_moment_after_delete(const Moments& m, std::size_t n, const Matrix& deleted);
Moments second_moment_after_add(const Moments& m, std::size_t n, const Matrix& added);

bool all_finite(const Matrix& m);

}  // namespace subal
