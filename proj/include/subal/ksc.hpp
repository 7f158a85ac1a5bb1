#pragma once

// Unconstrained K-subspace clustering: alternate PCA fits per cluster with
// nearest-subspace assignment.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "subal/model.hpp"

namespace subal {

inline constexpr std::size_t kMinFitSize = 2;

struct AlternationOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-9;
  Centering centering = Centering::kOn;
};

struct KscResult {
  Clustering clustering;              // objective: total loss under `models`
  std::vector<SubspaceModel> models;  // fitted on the returned assignment
  std::vector<double> trace;          // objective after each assignment step
  int iterations = 0;
};

// PCA fit of one cluster.  The basis keeps the leading min(q, n - 1)
// eigenvectors (min(q, n) without centering).  Throws kDegenerateCluster for
// fewer than two points and kInvalidInput when q >= P.
SubspaceModel fit_cluster(const Matrix& points, int q, Centering centering = Centering::kOn);

// One model per cluster 0..K-1 from the current assignment.
std::vector<SubspaceModel> fit_models(const Matrix& points, const std::vector<int>& assignment,
                                      int num_clusters, int q, Centering centering);

// Nearest-subspace assignment; ties go to the lower cluster index.
Clustering assign(const Matrix& points, std::span<const SubspaceModel> models);
Clustering assign(const Dataset& data, std::span<const SubspaceModel> models);

KscResult run_ksc(const Matrix& points, int num_clusters, int q, const Clustering& init,
                  const AlternationOptions& options = {});

// Uniform random labels, redrawn until every cluster has at least two points.
Clustering random_clustering(std::size_t n, int num_clusters, std::mt19937_64& rng);

// Runs KSC from `restarts` seeded random initializations and keeps the
// lowest objective (earliest restart on ties).  Restart r always sees the
// same initialization for a given seed, whatever the restart count.
KscResult best_of_restarts(const Matrix& points, int num_clusters, int q, int restarts,
                           std::uint64_t seed, const AlternationOptions& options = {});

namespace detail {

// Ensures every cluster has at least kMinFitSize members by moving the
// worst-reconstructed movable points into undersized clusters.  Points with
// locked[i] set are never moved.  Throws kClusteringCollapsed when no donor
// exists.
void repair_clusters(const Matrix& points, std::vector<int>& assignment, int num_clusters, int q,
                     Centering centering, const std::vector<bool>& locked);

bool relative_stall(double previous, double current, double tolerance);

}  // namespace detail

}  // namespace subal
