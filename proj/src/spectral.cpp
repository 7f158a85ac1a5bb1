#include "subal/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "subal/datagen.hpp"
#include "subal/error.hpp"

namespace subal {
namespace {

constexpr double kSymmetryTolerance = 1e-10;
constexpr double kMinDegree = 1e-12;

void check_affinity(const Matrix& w) {
  if (w.rows() != w.cols() || w.rows() < 1) throw Error(ErrorCode::kInvalidInput, "affinity must be square");
  if (!w.allFinite()) throw Error(ErrorCode::kInvalidInput, "affinity has non-finite entries");
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * std::max(1.0, w.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::kInvalidInput, "affinity is not symmetric");
  }
  if (w.minCoeff() < 0.0) throw Error(ErrorCode::kInvalidInput, "affinity has negative entries");
}

struct KMeansRun {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

// Lloyd iterations from k-means++ seeds.
KMeansRun kmeans_once(const Matrix& x, int k, int max_iterations, std::mt19937_64& rng) {
  const auto n = x.rows();
  Matrix centers(k, x.cols());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());

  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = x.row(first(rng));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (x.row(i) - centers.row(c - 1)).squaredNorm());
      total += d2[static_cast<std::size_t>(i)];
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (pick = 0; pick + 1 < n; ++pick) {
        target -= d2[static_cast<std::size_t>(pick)];
        if (target < 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = x.row(pick);
  }

  KMeansRun run;
  run.labels.assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      changed = changed || run.labels[static_cast<std::size_t>(i)] != best;
      run.labels[static_cast<std::size_t>(i)] = best;
      inertia += best_d;
    }
    run.inertia = inertia;
    if (it > 0 && !changed) break;

    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(run.labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
  }
  return run;
}

}  // namespace

Matrix edit_affinity(const Matrix& w, const LabelStore& labels) {
  check_affinity(w);
  Matrix out = w;
  const auto& map = labels.labels();
  for (auto a = map.begin(); a != map.end(); ++a) {
    if (a->first >= static_cast<std::size_t>(w.rows())) throw Error(ErrorCode::kInvalidInput, "labelled id outside affinity");
    for (auto b = std::next(a); b != map.end(); ++b) {
      const double value = a->second == b->second ? 1.0 : 0.0;
      const auto i = static_cast<Eigen::Index>(a->first);
      const auto j = static_cast<Eigen::Index>(b->first);
      out(i, j) = value;
      out(j, i) = value;
    }
  }
  return out;
}

Matrix normalized_laplacian(const Matrix& w) {
  check_affinity(w);
  const Vector degree = w.rowwise().sum();
  const Vector inv_sqrt = degree.unaryExpr([](double d) { return 1.0 / std::sqrt(std::max(d, kMinDegree)); });
  Matrix lap = -(inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  return 0.5 * (lap + lap.transpose());
}

Clustering spectral_cluster(const Matrix& w, int num_clusters, const SpectralOptions& options) {
  if (num_clusters < 2) throw Error(ErrorCode::kInvalidInput, "spectral_cluster: K must be at least 2");
  if (w.rows() < num_clusters) throw Error(ErrorCode::kInvalidInput, "spectral_cluster: fewer points than clusters");
  const Matrix lap = normalized_laplacian(w);
  const EigenDecomposition eig = sym_eigen(lap, EigenMethod::kAuto);

  // Smallest eigenvalues sit at the end of the descending spectrum.
  Matrix embedding = eig.vectors.rightCols(num_clusters).rowwise().reverse();
  for (Eigen::Index i = 0; i < embedding.rows(); ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }

  std::mt19937_64 rng(options.seed);
  KMeansRun best;
  for (int r = 0; r < std::max(1, options.kmeans_restarts); ++r) {
    KMeansRun run = kmeans_once(embedding, num_clusters, options.kmeans_max_iterations, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return Clustering{std::move(best.labels), best.inertia};
}

SpectralStepResult spectral_active_step(const Matrix& points, const Matrix& w, const LabelStore& labels,
                                        int num_clusters, int q, const SpectralOptions& spectral,
                                        const KsccOptions& kscc) {
  if (w.rows() != points.rows()) throw Error(ErrorCode::kInvalidInput, "affinity size does not match the data");
  SpectralStepResult out;
  out.spectral = spectral_cluster(edit_affinity(w, labels), num_clusters, spectral);
  out.refined = run_kscc(points, num_clusters, q, out.spectral, labels, kscc);
  return out;
}

Matrix load_affinity(const std::string& path) {
  Matrix w = read_csv_matrix(path);
  check_affinity(w);
  return w;
}

}  // namespace subal
