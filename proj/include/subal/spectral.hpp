#pragma once

// Spectral update path: constraints are written into a pairwise affinity
// matrix, the edited graph is clustered spectrally, and a final constrained
// KSC pass makes every labelled pair consistent.

#include <cstdint>

#include "subal/kscc.hpp"

namespace subal {

// Labelled pairs get affinity 1 (same class) or 0 (different classes);
// all other entries, including the diagonal, are left alone.  Throws
// kInvalidInput for non-square, asymmetric or negative input.
Matrix edit_affinity(const Matrix& w, const LabelStore& labels);

struct SpectralOptions {
  int kmeans_restarts = 20;
  int kmeans_max_iterations = 100;
  std::uint64_t seed = 0;
};

// Symmetric normalized Laplacian I - D^-1/2 W D^-1/2.  Zero degrees are
// replaced by 1e-12.
Matrix normalized_laplacian(const Matrix& w);

// Rows of the eigenvectors for the K smallest Laplacian eigenvalues,
// normalized to unit length, clustered by seeded k-means.  The returned
// objective is the k-means inertia of the embedding.
Clustering spectral_cluster(const Matrix& w, int num_clusters, const SpectralOptions& options = {});

struct SpectralStepResult {
  Clustering spectral;  // spectral labels before the constrained pass
  KsccResult refined;
};

SpectralStepResult spectral_active_step(const Matrix& points, const Matrix& w, const LabelStore& labels,
                                        int num_clusters, int q, const SpectralOptions& spectral = {},
                                        const KsccOptions& kscc = {});

// Loads a symmetric N x N CSV affinity matrix.
Matrix load_affinity(const std::string& path);

}  // namespace subal
