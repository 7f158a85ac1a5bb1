#pragma once

// Core value types shared by the clustering, query and update stages.
//
// Conventions: point ids are row indices 0..N-1.  Cluster indices inside a
// Clustering are 0-based.  Classes (ground truth, oracle answers, label
// files) are 1-based.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "subal/numkit.hpp"

namespace subal {

using PointId = std::size_t;

enum class PayloadKind { kFeatures, kGrayscaleImage, kTrajectory };

struct Payload {
  PayloadKind kind = PayloadKind::kFeatures;
  int height = 0;  // grayscale_image only
  int width = 0;   // grayscale_image only
  int frames = 0;  // trajectory only
};

struct Dataset {
  Matrix points;                                 // N x P
  std::optional<std::vector<int>> true_classes;  // 1-based
  Payload payload;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }

  // Checks the row/label invariants for K classes; throws kInvalidInput.
  void validate(int num_classes) const;
};

// Whether subspaces are affine (fitted around the cluster mean) or linear
// (through the origin, second-moment matrix instead of covariance).
enum class Centering { kOn, kOff };

struct SubspaceModel {
  Vector mean;          // zero when fitted without centering
  Matrix eigenvectors;  // P x P, columns ordered by `spectrum`
  Vector spectrum;      // all P eigenvalues, non-increasing
  Eigen::Index basis_dim = 0;
  std::size_t size = 0;

  auto basis() const { return eigenvectors.leftCols(basis_dim); }
  Eigen::Index dim() const { return mean.size(); }
  double trailing_sum() const { return spectrum.tail(dim() - basis_dim).sum(); }
};

struct Clustering {
  std::vector<int> assignment;  // 0-based cluster per point
  double objective = 0.0;

  std::size_t size() const { return assignment.size(); }
  std::vector<std::size_t> cluster_sizes(int num_clusters) const;
  std::vector<PointId> members(int cluster) const;
};

// Queried points and their oracle classes, in query order.
class LabelStore {
 public:
  LabelStore() = default;
  explicit LabelStore(int num_classes) : num_classes_(num_classes) {}

  // Throws kInvalidInput for a repeated id or a class outside 1..K.
  void add(PointId id, int cls);

  bool contains(PointId id) const { return labels_.count(id) != 0; }
  int class_of(PointId id) const;
  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }
  int num_classes() const { return num_classes_; }
  const std::vector<PointId>& query_order() const { return order_; }
  const std::map<PointId, int>& labels() const { return labels_; }

 private:
  int num_classes_ = 0;  // 0 accepts any positive class
  std::map<PointId, int> labels_;
  std::vector<PointId> order_;
};

// Squared residual of x after projecting (x - mean) onto the model basis.
double reconstruction_loss(const Eigen::Ref<const Vector>& x, const SubspaceModel& model);

// Sum of per-point losses under each point's assigned model.
double total_loss(const Matrix& points, std::span<const SubspaceModel> models,
                  const std::vector<int>& assignment);
double total_loss(const Dataset& data, std::span<const SubspaceModel> models,
                  const Clustering& clustering);

Matrix gather_rows(const Matrix& points, std::span<const PointId> ids);

}  // namespace subal
