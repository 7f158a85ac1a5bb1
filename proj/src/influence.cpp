#include "subal/influence.hpp"

#include "subal/error.hpp"
#include "subal/ksc.hpp"

namespace subal {
namespace {

auto trailing_vectors(const SubspaceModel& m) { return m.eigenvectors.rightCols(m.dim() - m.basis_dim); }
auto trailing_values(const SubspaceModel& m) { return m.spectrum.tail(m.dim() - m.basis_dim); }

void check_dim(Eigen::Index got, const SubspaceModel& m) {
  if (got != m.dim()) throw Error(ErrorCode::kInvalidInput, "influence: dimension mismatch");
}

double trailing_sum(const Matrix& cov, Eigen::Index basis_dim) {
  const EigenDecomposition eig = sym_eigen(cov);
  return eig.values.tail(eig.values.size() - basis_dim).sum();
}

}  // namespace

double deletion_influence(const Eigen::Ref<const Vector>& x, const SubspaceModel& model) {
  check_dim(x.size(), model);
  if (model.size < static_cast<std::size_t>(model.basis_dim) + 3) {
    throw Error(ErrorCode::kDegenerateCluster, "deletion_influence: cluster too small");
  }
  const double denom = static_cast<double>(model.size) - 1.0;
  const Vector alpha = trailing_vectors(model).transpose() * (x - model.mean);
  return (alpha.squaredNorm() - trailing_values(model).sum()) / denom;
}

double block_deletion_influence(const Matrix& rows, const SubspaceModel& model) {
  check_dim(rows.cols(), model);
  const auto l = static_cast<std::size_t>(rows.rows());
  if (l < 1) throw Error(ErrorCode::kInvalidInput, "deletion_influence: empty block");
  if (model.size < static_cast<std::size_t>(model.basis_dim) + 2 + l) {
    throw Error(ErrorCode::kDegenerateCluster, "deletion_influence: cluster too small");
  }
  const double denom = static_cast<double>(model.size - l);
  const Matrix centered = rows.rowwise() - model.mean.transpose();
  const Matrix alpha = centered * trailing_vectors(model);
  return (alpha.squaredNorm() - static_cast<double>(l) * trailing_values(model).sum()) / denom;
}

double addition_influence(const Eigen::Ref<const Vector>& x, const SubspaceModel& model) {
  check_dim(x.size(), model);
  if (model.size < static_cast<std::size_t>(model.basis_dim) + 2) {
    throw Error(ErrorCode::kDegenerateCluster, "addition_influence: cluster too small");
  }
  const double denom = static_cast<double>(model.size) + 1.0;
  const Vector alpha = trailing_vectors(model).transpose() * (x - model.mean);
  return (alpha.squaredNorm() - trailing_values(model).sum()) / denom;
}

double exact_deletion_oracle(const Eigen::Ref<const Vector>& x, const Matrix& cluster, int q,
                             Centering centering, OracleScale scale) {
  const SubspaceModel before = fit_cluster(cluster, q, centering);
  check_dim(x.size(), before);
  const std::size_t n = before.size;
  const Moments m{before.mean, centering == Centering::kOn ? covariance(cluster).cov : second_moment(cluster).cov};
  const Matrix row = x.transpose();
  const Moments after = centering == Centering::kOn ? cov_after_delete(m, n, row)
                                                    : second_moment_after_delete(m, n, row);
  const double lost = trailing_sum(after.cov, before.basis_dim);
  if (scale == OracleScale::kScatter) {
    return static_cast<double>(n) * before.trailing_sum() - static_cast<double>(n - 1) * lost;
  }
  return before.trailing_sum() - lost;
}

double exact_addition_oracle(const Eigen::Ref<const Vector>& x, const Matrix& cluster, int q,
                             Centering centering, OracleScale scale) {
  const SubspaceModel before = fit_cluster(cluster, q, centering);
  check_dim(x.size(), before);
  const std::size_t n = before.size;
  const Moments m{before.mean, centering == Centering::kOn ? covariance(cluster).cov : second_moment(cluster).cov};
  const Matrix row = x.transpose();
  const Moments after = centering == Centering::kOn ? cov_after_add(m, n, row)
                                                    : second_moment_after_add(m, n, row);
  const double gained = trailing_sum(after.cov, before.basis_dim);
  if (scale == OracleScale::kScatter) {
    return static_cast<double>(n + 1) * gained - static_cast<double>(n) * before.trailing_sum();
  }
  return gained - before.trailing_sum();
}

InfluenceScores score_all(const Matrix& points, std::span<const SubspaceModel> models,
                          const Clustering& clustering, const LabelStore& labels) {
  if (models.size() < 2) throw Error(ErrorCode::kInvalidInput, "score_all: need at least two clusters");
  if (clustering.size() != static_cast<std::size_t>(points.rows())) {
    throw Error(ErrorCode::kInvalidInput, "score_all: clustering length mismatch");
  }
  InfluenceScores scores;
  std::vector<double> losses(models.size());
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    const auto id = static_cast<PointId>(r);
    if (labels.contains(id)) continue;
    const Vector x = points.row(r).transpose();
    for (std::size_t k = 0; k < models.size(); ++k) losses[k] = reconstruction_loss(x, models[k]);

    PointInfluence p;
    p.id = id;
    p.assigned = clustering.assignment[id];
    p.runner_up = -1;
    for (std::size_t k = 0; k < models.size(); ++k) {
      if (static_cast<int>(k) == p.assigned) continue;
      if (p.runner_up < 0 || losses[k] < losses[static_cast<std::size_t>(p.runner_up)]) p.runner_up = static_cast<int>(k);
    }
    const auto& own = models[static_cast<std::size_t>(p.assigned)];
    const auto& other = models[static_cast<std::size_t>(p.runner_up)];
    p.assigned_loss = losses[static_cast<std::size_t>(p.assigned)];
    p.margin = losses[static_cast<std::size_t>(p.runner_up)] - p.assigned_loss;
    p.u1 = own.size >= static_cast<std::size_t>(own.basis_dim) + 3 ? deletion_influence(x, own) : kNoDeletionScore;
    p.u2 = other.size >= static_cast<std::size_t>(other.basis_dim) + 2 ? addition_influence(x, other) : kNoAdditionScore;
    scores.points.push_back(p);
  }
  if (scores.points.empty()) throw Error(ErrorCode::kNoUnlabelled, "every point is labelled");
  return scores;
}

}  // namespace subal
