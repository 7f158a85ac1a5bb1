#pragma once

// First-order influence of moving a point between clusters.
//
// U1 is the drop in a cluster's reconstruction error when points are
// deleted from it, U2 the rise in the runner-up cluster's error when the
// point is added there.  Both are expressed through the trailing (unused)
// eigenvalues of the 1/n covariance, so they carry that scale: the values
// are meant for ranking candidates against each other.

#include <limits>
#include <vector>

#include "subal/model.hpp"

namespace subal {

struct PointInfluence {
  PointId id = 0;
  int assigned = 0;   // 0-based
  int runner_up = 0;  // 0-based, != assigned
  double u1 = 0.0;
  double u2 = 0.0;
  double assigned_loss = 0.0;
  double margin = 0.0;  // runner-up loss - assigned loss
};

// Unlabelled points in increasing id order.
struct InfluenceScores {
  std::vector<PointInfluence> points;
};

// Sentinels for points whose cluster is too small for the expansion.
inline constexpr double kNoDeletionScore = -std::numeric_limits<double>::infinity();
inline constexpr double kNoAdditionScore = std::numeric_limits<double>::infinity();

// Deletion influence of a single member point.  Requires model.size >=
// basis_dim + 3, else throws kDegenerateCluster.
double deletion_influence(const Eigen::Ref<const Vector>& x, const SubspaceModel& model);

// Deletion influence of a block of l member points (rows).  Requires
// model.size >= basis_dim + 2 + l.
double block_deletion_influence(const Matrix& rows, const SubspaceModel& model);

// Addition influence of a non-member point.  Requires model.size >=
// basis_dim + 2.
double addition_influence(const Eigen::Ref<const Vector>& x, const SubspaceModel& model);

// Exact counterparts computed by updating the covariance and refitting.
//
// kEigenvalue reports the change in the sum of trailing eigenvalues (same
// scale as the first-order scores).  kScatter reports the change in summed
// reconstruction loss over the cluster, i.e. size-weighted trailing sums.
enum class OracleScale { kEigenvalue, kScatter };

// `cluster` holds the cluster's current members, x among them.
double exact_deletion_oracle(const Eigen::Ref<const Vector>& x, const Matrix& cluster, int q,
                             Centering centering = Centering::kOn,
                             OracleScale scale = OracleScale::kEigenvalue);

// `cluster` holds the target cluster's members, x not among them.
double exact_addition_oracle(const Eigen::Ref<const Vector>& x, const Matrix& cluster, int q,
                             Centering centering = Centering::kOn,
                             OracleScale scale = OracleScale::kEigenvalue);

// Scores every unlabelled point: U1 against its assigned cluster, U2
// against the runner-up cluster (second smallest loss).  Throws
// kNoUnlabelled when every point is labelled.
InfluenceScores score_all(const Matrix& points, std::span<const SubspaceModel> models,
                          const Clustering& clustering, const LabelStore& labels);

}  // namespace subal
