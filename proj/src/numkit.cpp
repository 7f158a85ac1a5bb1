#include "subal/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "subal/error.hpp"

namespace subal {
namespace {

constexpr int kMaxSweeps = 100;
constexpr double kRelativeOffTolerance = 1e-12;
constexpr double kSignThreshold = 1e-10;

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  const auto n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

// Cyclic-by-row Jacobi.  `a` is overwritten with a (numerically) diagonal
// matrix; `v` accumulates the rotations.
void jacobi_sweeps(Matrix& a, Matrix& v) {
  const auto n = a.rows();
  const double scale = a.norm();
  if (scale == 0.0) return;
  const double target = kRelativeOffTolerance * scale;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) < target) return;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::hypot(1.0, tau));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
}

EigenDecomposition sorted(const Vector& raw_values, const Matrix& raw_vectors) {
  const auto n = raw_values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return raw_values[a] > raw_values[b];
  });

  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    out.values[j] = raw_values[src];
    out.vectors.col(j) = raw_vectors.col(src);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = out.vectors(i, j);
      if (std::abs(c) > kSignThreshold) {
        if (c < 0.0) out.vectors.col(j) *= -1.0;
        break;
      }
    }
  }
  return out;
}

void require_rows(const Matrix& m, Eigen::Index cols, const char* what) {
  if (m.cols() != cols) throw Error(ErrorCode::kInvalidInput, std::string(what) + ": dimension mismatch");
  if (!all_finite(m)) throw Error(ErrorCode::kInvalidInput, std::string(what) + ": non-finite entries");
}

// Covariance of a block that may hold a single row (zero matrix then).
Moments block_moments(const Matrix& x) {
  Moments m;
  m.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - m.mean.transpose();
  m.cov = (centered.transpose() * centered) / static_cast<double>(x.rows());
  m.cov = 0.5 * (m.cov + m.cov.transpose()).eval();
  return m;
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

EigenDecomposition sym_eigen(const Matrix& s, EigenMethod method) {
  if (s.rows() != s.cols() || s.rows() < 1) {
    throw Error(ErrorCode::kInvalidInput, "sym_eigen: matrix must be square and non-empty");
  }
  if (!all_finite(s)) throw Error(ErrorCode::kInvalidInput, "sym_eigen: non-finite entries");

  const Matrix sym = 0.5 * (s + s.transpose());
  const auto n = sym.rows();
  if (method == EigenMethod::kAuto) {
    method = n <= kJacobiMaxDim ? EigenMethod::kJacobi : EigenMethod::kTridiagonalQr;
  }

  if (method == EigenMethod::kTridiagonalQr) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) {
      throw Error(ErrorCode::kInvalidInput, "sym_eigen: QR iteration did not converge");
    }
    // Eigen returns ascending order; reverse before the stable sort so that
    // equal eigenvalues keep a deterministic order.
    return sorted(solver.eigenvalues().reverse(), solver.eigenvectors().rowwise().reverse());
  }

  Matrix a = sym;
  Matrix v = Matrix::Identity(n, n);
  jacobi_sweeps(a, v);
  return sorted(a.diagonal(), v);
}

Moments covariance(const Matrix& x) {
  if (x.rows() < 2) throw Error(ErrorCode::kDegenerateCluster, "covariance needs at least two points");
  require_rows(x, x.cols(), "covariance");
  return block_moments(x);
}

Moments second_moment(const Matrix& x) {
  if (x.rows() < 2) throw Error(ErrorCode::kDegenerateCluster, "second moment needs at least two points");
  require_rows(x, x.cols(), "second_moment");
  Moments m;
  m.mean = Vector::Zero(x.cols());
  m.cov = (x.transpose() * x) / static_cast<double>(x.rows());
  m.cov = 0.5 * (m.cov + m.cov.transpose()).eval();
  return m;
}

Moments cov_after_delete(const Moments& m, std::size_t n, const Matrix& deleted) {
  const auto l = static_cast<std::size_t>(deleted.rows());
  if (l < 1) throw Error(ErrorCode::kInvalidInput, "cov_after_delete: nothing to delete");
  if (l + 2 > n) throw Error(ErrorCode::kDegenerateCluster, "cov_after_delete: fewer than two points would remain");
  require_rows(deleted, m.mean.size(), "cov_after_delete");

  const Moments del = block_moments(deleted);
  const double nd = static_cast<double>(n);
  const double ld = static_cast<double>(l);
  const double eps = ld / (nd - ld);
  const Vector d = del.mean - m.mean;
  const Matrix ddt = d * d.transpose();

  Moments out;
  out.mean = (nd * m.mean - ld * del.mean) / (nd - ld);
  out.cov = m.cov + eps * ((m.cov - del.cov) - ddt) - eps * eps * ddt;
  return out;
}

Moments cov_after_add_block(const Moments& m, std::size_t n, const Matrix& added) {
  const auto l = static_cast<std::size_t>(added.rows());
  if (l < 1) throw Error(ErrorCode::kInvalidInput, "cov_after_add: nothing to add");
  if (n < 1) throw Error(ErrorCode::kInvalidInput, "cov_after_add: empty summary");
  require_rows(added, m.mean.size(), "cov_after_add");

  const Moments add = block_moments(added);
  const double nd = static_cast<double>(n);
  const double ld = static_cast<double>(l);
  const double eps = ld / (nd + ld);
  // Mean-difference outer product; the sum form does not reproduce the
  // covariance of the union.
  const Vector d = add.mean - m.mean;
  const Matrix ddt = d * d.transpose();

  Moments out;
  out.mean = (nd * m.mean + ld * add.mean) / (nd + ld);
  out.cov = m.cov + eps * ((add.cov - m.cov) + ddt) - eps * eps * ddt;
  return out;
}

Moments cov_after_add_point(const Moments& m, std::size_t n, const Vector& x) {
  if (n < 1) throw Error(ErrorCode::kInvalidInput, "cov_after_add: empty summary");
  if (x.size() != m.mean.size() || !x.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "cov_after_add: bad point");
  }
  const double eps = 1.0 / (static_cast<double>(n) + 1.0);
  const Vector e = m.mean - x;
  const Matrix eet = e * e.transpose();

  Moments out;
  out.mean = m.mean + eps * (x - m.mean);
  out.cov = m.cov + eps * (eet - m.cov) - eps * eps * eet;
  return out;
}

Moments cov_after_add(const Moments& m, std::size_t n, const Matrix& added) {
  if (added.rows() == 1) {
    require_rows(added, m.mean.size(), "cov_after_add");
    return cov_after_add_point(m, n, added.row(0).transpose());
  }
  return cov_after_add_block(m, n, added);
}

Moments second_moment_after_delete(const Moments& m, std::size_t n, const Matrix& deleted) {
  const auto l = static_cast<std::size_t>(deleted.rows());
  if (l < 1) throw Error(ErrorCode::kInvalidInput, "second_moment_after_delete: nothing to delete");
  if (l + 2 > n) throw Error(ErrorCode::kDegenerateCluster, "second_moment_after_delete: fewer than two points would remain");
  require_rows(deleted, m.cov.cols(), "second_moment_after_delete");
  const double nd = static_cast<double>(n);
  const double ld = static_cast<double>(l);
  Moments out;
  out.mean = Vector::Zero(m.cov.cols());
  out.cov = (nd * m.cov - deleted.transpose() * deleted) / (nd - ld);
  return out;
}

Moments second_moment_after_add(const Moments& m, std::size_t n, const Matrix& added) {
  if (added.rows() < 1) throw Error(ErrorCode::kInvalidInput, "second_moment_after_add: nothing to add");
  require_rows(added, m.cov.cols(), "second_moment_after_add");
  const double nd = static_cast<double>(n);
  const double ld = static_cast<double>(added.rows());
  Moments out;
  out.mean = Vector::Zero(m.cov.cols());
  out.cov = (nd * m.cov + added.transpose() * added) / (nd + ld);
  return out;
}

}  // namespace subal
