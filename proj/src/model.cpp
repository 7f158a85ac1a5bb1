#include "subal/model.hpp"

#include <set>
#include <string>

#include "subal/error.hpp"

namespace subal {

void Dataset::validate(int num_classes) const {
  if (points.rows() < 1 || points.cols() < 1) throw Error(ErrorCode::kInvalidInput, "empty dataset");
  if (!points.allFinite()) throw Error(ErrorCode::kInvalidInput, "dataset has non-finite entries");
  if (num_classes < 1) throw Error(ErrorCode::kInvalidInput, "K must be positive");
  if (size() < static_cast<std::size_t>(2 * num_classes)) {
    throw Error(ErrorCode::kInvalidInput, "dataset needs at least 2K points");
  }
  if (true_classes) {
    if (true_classes->size() != size()) throw Error(ErrorCode::kInvalidInput, "label count does not match points");
    std::set<int> seen;
    for (int c : *true_classes) {
      if (c < 1 || c > num_classes) {
        throw Error(ErrorCode::kInvalidInput, "class " + std::to_string(c) + " outside 1..K");
      }
      seen.insert(c);
    }
    if (static_cast<int>(seen.size()) != num_classes) {
      throw Error(ErrorCode::kInvalidInput, "not every class occurs in the labels");
    }
  }
}

std::vector<std::size_t> Clustering::cluster_sizes(int num_clusters) const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(num_clusters), 0);
  for (int k : assignment) ++sizes[static_cast<std::size_t>(k)];
  return sizes;
}

std::vector<PointId> Clustering::members(int cluster) const {
  std::vector<PointId> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == cluster) out.push_back(i);
  }
  return out;
}

void LabelStore::add(PointId id, int cls) {
  if (cls < 1 || (num_classes_ > 0 && cls > num_classes_)) {
    throw Error(ErrorCode::kInvalidInput, "class " + std::to_string(cls) + " outside 1..K");
  }
  if (!labels_.emplace(id, cls).second) {
    throw Error(ErrorCode::kInvalidInput, "point " + std::to_string(id) + " already labelled");
  }
  order_.push_back(id);
}

int LabelStore::class_of(PointId id) const {
  auto it = labels_.find(id);
  if (it == labels_.end()) throw Error(ErrorCode::kInvalidInput, "point " + std::to_string(id) + " is not labelled");
  return it->second;
}

double reconstruction_loss(const Eigen::Ref<const Vector>& x, const SubspaceModel& model) {
  if (x.size() != model.dim()) throw Error(ErrorCode::kInvalidInput, "reconstruction_loss: dimension mismatch");
  const Vector r = x - model.mean;
  if (model.basis_dim == 0) return r.squaredNorm();
  const auto basis = model.basis();
  const Vector residual = r - basis * (basis.transpose() * r);
  return residual.squaredNorm();
}

double total_loss(const Matrix& points, std::span<const SubspaceModel> models,
                  const std::vector<int>& assignment) {
  if (assignment.size() != static_cast<std::size_t>(points.rows())) {
    throw Error(ErrorCode::kInvalidInput, "total_loss: assignment length mismatch");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto k = static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)]);
    sum += reconstruction_loss(points.row(i).transpose(), models[k]);
  }
  return sum;
}

double total_loss(const Dataset& data, std::span<const SubspaceModel> models,
                  const Clustering& clustering) {
  return total_loss(data.points, models, clustering.assignment);
}

Matrix gather_rows(const Matrix& points, std::span<const PointId> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), points.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = points.row(static_cast<Eigen::Index>(ids[r]));
  }
  return out;
}

}  // namespace subal
