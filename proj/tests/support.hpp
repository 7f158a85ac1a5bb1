#pragma once

// Independent reference computations and fixtures shared by the tests.
// Everything here is written with explicit loops or library solvers so it
// does not reuse the code under test.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subal/model.hpp"

namespace subal::testing {

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

inline Matrix random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix a = gaussian_matrix(n, n, rng);
  return (a + a.transpose()) / 2.0;
}

// Mean and 1/n covariance by explicit summation.
inline std::pair<Vector, Matrix> loop_covariance(const Matrix& x) {
  const auto n = x.rows();
  const auto p = x.cols();
  Vector mean = Vector::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) mean[j] += x(i, j);
  mean /= static_cast<double>(n);
  Matrix cov = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b < p; ++b) cov(a, b) += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
  cov /= static_cast<double>(n);
  return {mean, cov};
}

// Sum of the smallest P - q eigenvalues, via Eigen's solver.
inline double trailing_eigen_sum(const Matrix& s, Eigen::Index q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const Vector ev = es.eigenvalues();  // ascending
  return ev.head(ev.size() - q).sum();
}

// Natural-log NMI from an explicit contingency table (arithmetic mean).
inline double reference_nmi(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0 / n;
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
  }
  double ha = 0, hb = 0, mi = 0;
  for (auto [k, v] : pa) ha -= v * std::log(v);
  for (auto [k, v] : pb) hb -= v * std::log(v);
  for (auto [k, v] : joint) mi += v * std::log(v / (pa[k.first] * pb[k.second]));
  if (ha + hb == 0.0) return 1.0;
  return 2.0 * mi / (ha + hb);
}

// Minimum over all permutations.
inline double brute_force_assignment(const Matrix& cost) {
  std::vector<int> perm(static_cast<std::size_t>(cost.rows()));
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += cost(static_cast<Eigen::Index>(i), perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Principal angles (degrees) between the column spans of two orthonormal
// frames, ascending.
inline std::vector<double> principal_angles_deg(const Matrix& a, const Matrix& b) {
  Eigen::JacobiSVD<Matrix> svd(a.transpose() * b);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    const double c = std::clamp(svd.singularValues()[i], -1.0, 1.0);
    out.push_back(std::acos(c) * 180.0 / M_PI);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Every labelled pair of the same class shares a cluster; different classes
// never do.
inline bool constraints_hold(const std::vector<int>& assignment, const LabelStore& labels) {
  const auto& m = labels.labels();
  for (auto a = m.begin(); a != m.end(); ++a)
    for (auto b = std::next(a); b != m.end(); ++b) {
      const bool same_cluster = assignment[a->first] == assignment[b->first];
      if (same_cluster != (a->second == b->second)) return false;
    }
  return true;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("subal_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace subal::testing
