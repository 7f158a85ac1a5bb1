#include "subal/ksc.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "subal/error.hpp"

namespace subal {

SubspaceModel fit_cluster(const Matrix& points, int q, Centering centering) {
  if (points.rows() < static_cast<Eigen::Index>(kMinFitSize)) {
    throw Error(ErrorCode::kDegenerateCluster, "fit_cluster needs at least two points");
  }
  if (q < 0 || q >= points.cols()) throw Error(ErrorCode::kInvalidInput, "fit_cluster: need 0 <= q < P");

  const Moments m = centering == Centering::kOn ? covariance(points) : second_moment(points);
  EigenDecomposition eig = sym_eigen(m.cov);

  SubspaceModel model;
  model.mean = m.mean;
  model.eigenvectors = std::move(eig.vectors);
  model.spectrum = std::move(eig.values);
  model.size = static_cast<std::size_t>(points.rows());
  const auto rank_bound = centering == Centering::kOn ? points.rows() - 1 : points.rows();
  model.basis_dim = std::min<Eigen::Index>(q, rank_bound);
  return model;
}

std::vector<SubspaceModel> fit_models(const Matrix& points, const std::vector<int>& assignment,
                                      int num_clusters, int q, Centering centering) {
  Clustering view{assignment, 0.0};
  std::vector<SubspaceModel> models;
  models.reserve(static_cast<std::size_t>(num_clusters));
  for (int k = 0; k < num_clusters; ++k) {
    const auto ids = view.members(k);
    models.push_back(fit_cluster(gather_rows(points, ids), q, centering));
  }
  return models;
}

Clustering assign(const Matrix& points, std::span<const SubspaceModel> models) {
  if (models.empty()) throw Error(ErrorCode::kInvalidInput, "assign: no models");
  Clustering out;
  out.assignment.resize(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vector x = points.row(i).transpose();
    int best = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < models.size(); ++k) {
      const double loss = reconstruction_loss(x, models[k]);
      if (loss < best_loss) {
        best_loss = loss;
        best = static_cast<int>(k);
      }
    }
    out.assignment[static_cast<std::size_t>(i)] = best;
    out.objective += best_loss;
  }
  return out;
}

Clustering assign(const Dataset& data, std::span<const SubspaceModel> models) {
  return assign(data.points, models);
}

namespace detail {

bool relative_stall(double previous, double current, double tolerance) {
  return previous - current <= tolerance * std::abs(previous);
}

void repair_clusters(const Matrix& points, std::vector<int>& assignment, int num_clusters, int q,
                     Centering centering, const std::vector<bool>& locked) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(num_clusters), 0);
  for (int k : assignment) ++sizes[static_cast<std::size_t>(k)];
  const auto undersized = [&] {
    return std::any_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s < kMinFitSize; });
  };
  if (!undersized()) return;

  // Loss of each point under its own cluster's fit; points in clusters too
  // small to fit count as perfectly reconstructed.
  Clustering view{assignment, 0.0};
  std::vector<double> loss(assignment.size(), 0.0);
  for (int k = 0; k < num_clusters; ++k) {
    if (sizes[static_cast<std::size_t>(k)] < kMinFitSize) continue;
    const auto ids = view.members(k);
    const SubspaceModel model = fit_cluster(gather_rows(points, ids), q, centering);
    for (PointId i : ids) loss[i] = reconstruction_loss(points.row(static_cast<Eigen::Index>(i)).transpose(), model);
  }

  std::vector<bool> moved(assignment.size(), false);
  for (int k = 0; k < num_clusters; ++k) {
    while (sizes[static_cast<std::size_t>(k)] < kMinFitSize) {
      std::size_t pick = assignment.size();
      for (std::size_t i = 0; i < assignment.size(); ++i) {
        const auto from = static_cast<std::size_t>(assignment[i]);
        if (locked[i] || moved[i] || assignment[i] == k || sizes[from] <= kMinFitSize) continue;
        if (pick == assignment.size() || loss[i] > loss[pick]) pick = i;
      }
      if (pick == assignment.size()) {
        throw Error(ErrorCode::kClusteringCollapsed, "cluster " + std::to_string(k + 1) + " cannot be refilled");
      }
      --sizes[static_cast<std::size_t>(assignment[pick])];
      ++sizes[static_cast<std::size_t>(k)];
      assignment[pick] = k;
      moved[pick] = true;
    }
  }
}

}  // namespace detail

KscResult run_ksc(const Matrix& points, int num_clusters, int q, const Clustering& init,
                  const AlternationOptions& options) {
  if (num_clusters < 1) throw Error(ErrorCode::kInvalidInput, "run_ksc: K must be positive");
  if (init.size() != static_cast<std::size_t>(points.rows())) {
    throw Error(ErrorCode::kInvalidInput, "run_ksc: initial assignment length mismatch");
  }
  for (int k : init.assignment) {
    if (k < 0 || k >= num_clusters) throw Error(ErrorCode::kInvalidInput, "run_ksc: cluster index out of range");
  }

  const std::vector<bool> locked(init.size(), false);
  KscResult result;
  std::vector<int> assignment = init.assignment;
  detail::repair_clusters(points, assignment, num_clusters, q, options.centering, locked);

  for (int it = 0; it < options.max_iterations; ++it) {
    const auto models = fit_models(points, assignment, num_clusters, q, options.centering);
    Clustering next = assign(points, models);
    result.trace.push_back(next.objective);
    result.iterations = it + 1;

    const bool unchanged = next.assignment == assignment;
    const bool stalled = result.trace.size() > 1 &&
                         detail::relative_stall(result.trace[result.trace.size() - 2], next.objective,
                                                options.relative_tolerance);
    assignment = std::move(next.assignment);
    detail::repair_clusters(points, assignment, num_clusters, q, options.centering, locked);
    if (unchanged || stalled) break;
  }

  result.models = fit_models(points, assignment, num_clusters, q, options.centering);
  result.clustering.objective = total_loss(points, result.models, assignment);
  result.clustering.assignment = std::move(assignment);
  return result;
}

Clustering random_clustering(std::size_t n, int num_clusters, std::mt19937_64& rng) {
  if (n < kMinFitSize * static_cast<std::size_t>(num_clusters)) {
    throw Error(ErrorCode::kInvalidInput, "random_clustering: fewer than 2K points");
  }
  std::uniform_int_distribution<int> pick(0, num_clusters - 1);
  Clustering c;
  c.assignment.resize(n);
  for (;;) {
    for (auto& k : c.assignment) k = pick(rng);
    const auto sizes = c.cluster_sizes(num_clusters);
    if (std::all_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s >= kMinFitSize; })) return c;
  }
}

KscResult best_of_restarts(const Matrix& points, int num_clusters, int q, int restarts,
                           std::uint64_t seed, const AlternationOptions& options) {
  if (restarts < 1) throw Error(ErrorCode::kInvalidInput, "best_of_restarts: restarts must be >= 1");
  std::mt19937_64 rng(seed);
  std::optional<KscResult> best;
  for (int r = 0; r < restarts; ++r) {
    const Clustering init = random_clustering(static_cast<std::size_t>(points.rows()), num_clusters, rng);
    try {
      KscResult run = run_ksc(points, num_clusters, q, init, options);
      if (!best || run.clustering.objective < best->clustering.objective) best = std::move(run);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kClusteringCollapsed) throw;
    }
  }
  if (!best) throw Error(ErrorCode::kClusteringCollapsed, "every restart collapsed");
  return *std::move(best);
}

}  // namespace subal
