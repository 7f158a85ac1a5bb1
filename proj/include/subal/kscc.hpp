#pragma once

// K-subspace clustering under class constraints from labelled points.
//
// Each iteration (1) fits one subspace per cluster, (2) moves every
// unlabelled point to its nearest subspace, and (3) maps queried classes
// onto clusters by a minimum-cost perfect matching and places every
// labelled point in its class's cluster.  The combined objective
//
//   g = sum over unlabelled u of min_k L(x_u, V_k)
//     + min over class->cluster bijections of the labelled losses
//
// never increases from one iteration to the next.

#include <functional>
#include <vector>

#include "subal/ksc.hpp"

namespace subal {

struct LinearAssignment {
  std::vector<int> col_of_row;
  double total_cost = 0.0;
};

// Minimum-cost perfect matching of rows to columns (O(K^3) potentials
// method).  Throws kInvalidInput for non-square or non-finite input.
LinearAssignment hungarian(const Matrix& cost);

struct ClassClusterMatching {
  Matrix cost;                        // (cluster, class-1): labelled loss of the class under the cluster
  std::vector<int> cluster_of_class;  // class-1 -> 0-based cluster
  double total_cost = 0.0;
};

// Classes without labelled points have an all-zero column and prefer the
// cluster with their own index when it is free.
ClassClusterMatching match_classes(const Matrix& points, std::span<const SubspaceModel> models,
                                   const LabelStore& labels);

// g evaluated at the given models.
double constrained_objective(const Matrix& points, std::span<const SubspaceModel> models,
                             const LabelStore& labels);

struct KsccIteration {
  int iteration = 0;  // 1-based
  const std::vector<int>& assignment;
  const ClassClusterMatching& matching;
  double objective = 0.0;
};

struct KsccOptions : AlternationOptions {
  // Called after stage 3 of every iteration.
  std::function<void(const KsccIteration&)> observer;
};

struct KsccResult {
  Clustering clustering;              // objective: total loss under `models`
  std::vector<SubspaceModel> models;  // fitted on the returned assignment
  std::vector<double> trace;          // g after each iteration
  ClassClusterMatching matching;      // from the last iteration
  int iterations = 0;
};

KsccResult run_kscc(const Matrix& points, int num_clusters, int q, const Clustering& init,
                    const LabelStore& labels, const KsccOptions& options = {});

// True when labelled points share a cluster exactly when they share a class.
bool satisfies_constraints(const std::vector<int>& assignment, const LabelStore& labels);

}  // namespace subal
