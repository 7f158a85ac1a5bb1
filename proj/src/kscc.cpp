#include "subal/kscc.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "subal/error.hpp"

namespace subal {

LinearAssignment hungarian(const Matrix& cost) {
  if (cost.rows() != cost.cols() || cost.rows() < 1) {
    throw Error(ErrorCode::kInvalidInput, "hungarian: cost matrix must be square and non-empty");
  }
  if (!cost.allFinite()) throw Error(ErrorCode::kInvalidInput, "hungarian: non-finite cost");

  // 1-based potentials formulation; column 0 is a virtual start column.
  const auto n = static_cast<std::size_t>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = row_of_col[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  LinearAssignment out;
  out.col_of_row.assign(n, -1);
  for (std::size_t j = 1; j <= n; ++j) out.col_of_row[row_of_col[j] - 1] = static_cast<int>(j - 1);
  for (std::size_t r = 0; r < n; ++r) {
    out.total_cost += cost(static_cast<Eigen::Index>(r), out.col_of_row[r]);
  }
  return out;
}

ClassClusterMatching match_classes(const Matrix& points, std::span<const SubspaceModel> models,
                                   const LabelStore& labels) {
  const auto k = static_cast<Eigen::Index>(models.size());
  ClassClusterMatching m;
  m.cost = Matrix::Zero(k, k);
  std::vector<bool> has_points(static_cast<std::size_t>(k), false);
  for (const auto& [id, cls] : labels.labels()) {
    if (cls < 1 || cls > k) throw Error(ErrorCode::kInvalidInput, "match_classes: class outside 1..K");
    has_points[static_cast<std::size_t>(cls - 1)] = true;
    const Vector x = points.row(static_cast<Eigen::Index>(id)).transpose();
    for (Eigen::Index c = 0; c < k; ++c) m.cost(c, cls - 1) += reconstruction_loss(x, models[static_cast<std::size_t>(c)]);
  }

  // Rows are classes for the solver.
  const LinearAssignment a = hungarian(m.cost.transpose());
  m.cluster_of_class = a.col_of_row;

  // Unqueried classes carry no cost: hand them the leftover clusters, own
  // index first, then lowest index.
  std::vector<int> free_clusters;
  for (Eigen::Index cls = 0; cls < k; ++cls) {
    if (!has_points[static_cast<std::size_t>(cls)]) free_clusters.push_back(m.cluster_of_class[static_cast<std::size_t>(cls)]);
  }
  std::sort(free_clusters.begin(), free_clusters.end());
  std::vector<bool> taken(static_cast<std::size_t>(k), false);
  for (Eigen::Index cls = 0; cls < k; ++cls) {
    if (has_points[static_cast<std::size_t>(cls)]) continue;
    if (std::binary_search(free_clusters.begin(), free_clusters.end(), static_cast<int>(cls))) {
      m.cluster_of_class[static_cast<std::size_t>(cls)] = static_cast<int>(cls);
      taken[static_cast<std::size_t>(cls)] = true;
    } else {
      m.cluster_of_class[static_cast<std::size_t>(cls)] = -1;
    }
  }
  auto next_free = free_clusters.begin();
  for (Eigen::Index cls = 0; cls < k; ++cls) {
    auto& slot = m.cluster_of_class[static_cast<std::size_t>(cls)];
    if (slot != -1) continue;
    while (taken[static_cast<std::size_t>(*next_free)]) ++next_free;
    slot = *next_free;
    taken[static_cast<std::size_t>(slot)] = true;
  }

  m.total_cost = 0.0;
  for (Eigen::Index cls = 0; cls < k; ++cls) m.total_cost += m.cost(m.cluster_of_class[static_cast<std::size_t>(cls)], cls);
  return m;
}

double constrained_objective(const Matrix& points, std::span<const SubspaceModel> models,
                             const LabelStore& labels) {
  double unlabelled = 0.0;
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    if (labels.contains(static_cast<PointId>(r))) continue;
    const Vector x = points.row(r).transpose();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : models) best = std::min(best, reconstruction_loss(x, m));
    unlabelled += best;
  }
  return unlabelled + match_classes(points, models, labels).total_cost;
}

bool satisfies_constraints(const std::vector<int>& assignment, const LabelStore& labels) {
  std::map<int, int> cluster_of_class;
  std::map<int, int> class_of_cluster;
  for (const auto& [id, cls] : labels.labels()) {
    const int k = assignment.at(id);
    auto [a, fresh_a] = cluster_of_class.emplace(cls, k);
    if (!fresh_a && a->second != k) return false;
    auto [b, fresh_b] = class_of_cluster.emplace(k, cls);
    if (!fresh_b && b->second != cls) return false;
  }
  return true;
}

KsccResult run_kscc(const Matrix& points, int num_clusters, int q, const Clustering& init,
                    const LabelStore& labels, const KsccOptions& options) {
  if (num_clusters < 1) throw Error(ErrorCode::kInvalidInput, "run_kscc: K must be positive");
  if (init.size() != static_cast<std::size_t>(points.rows())) {
    throw Error(ErrorCode::kInvalidInput, "run_kscc: initial assignment length mismatch");
  }
  for (int k : init.assignment) {
    if (k < 0 || k >= num_clusters) throw Error(ErrorCode::kInvalidInput, "run_kscc: cluster index out of range");
  }
  std::vector<bool> locked(init.size(), false);
  for (const auto& [id, cls] : labels.labels()) {
    if (id >= init.size()) throw Error(ErrorCode::kInvalidInput, "run_kscc: labelled id out of range");
    if (cls < 1 || cls > num_clusters) throw Error(ErrorCode::kInvalidInput, "run_kscc: class outside 1..K");
    locked[id] = true;
  }

  KsccResult result;
  std::vector<int> assignment = init.assignment;
  detail::repair_clusters(points, assignment, num_clusters, q, options.centering, locked);

  for (int it = 0; it < options.max_iterations; ++it) {
    // Stage 1: fit subspaces on the current assignment.
    const auto models = fit_models(points, assignment, num_clusters, q, options.centering);

    // Stage 2: unlabelled points move to their nearest subspace.
    std::vector<int> next = assignment;
    double unlabelled = 0.0;
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
      const auto id = static_cast<std::size_t>(r);
      if (locked[id]) continue;
      const Vector x = points.row(r).transpose();
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < num_clusters; ++k) {
        const double loss = reconstruction_loss(x, models[static_cast<std::size_t>(k)]);
        if (loss < best) {
          best = loss;
          next[id] = k;
        }
      }
      unlabelled += best;
    }

    // Stage 3: labelled points follow the optimal class->cluster matching.
    ClassClusterMatching matching = match_classes(points, models, labels);
    for (const auto& [id, cls] : labels.labels()) next[id] = matching.cluster_of_class[static_cast<std::size_t>(cls - 1)];

    const double g = unlabelled + matching.total_cost;
    result.trace.push_back(g);
    result.iterations = it + 1;
    if (options.observer) options.observer(KsccIteration{it + 1, next, matching, g});

    const bool unchanged = next == assignment;
    const bool stalled = result.trace.size() > 1 &&
                         detail::relative_stall(result.trace[result.trace.size() - 2], g, options.relative_tolerance);
    assignment = std::move(next);
    result.matching = std::move(matching);
    detail::repair_clusters(points, assignment, num_clusters, q, options.centering, locked);
    if (unchanged || stalled) break;
  }

  result.models = fit_models(points, assignment, num_clusters, q, options.centering);
  result.clustering.objective = total_loss(points, result.models, assignment);
  result.clustering.assignment = std::move(assignment);
  return result;
}

}  // namespace subal
