#pragma once

// Synthetic union-of-subspaces generators, dataset file I/O and global PCA
// preprocessing.
//
// On-disk layout for a dataset with stem `name`:
//   name.csv     one point per row, comma separated, no header
//   name.labels  optional, one 1-based class per line
//   name.meta    optional, key=value lines: kind, height, width, frames, K_true

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "subal/model.hpp"

namespace subal {

enum class SyntheticKind { kNoiseSweep, kAngleSweep };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kNoiseSweep;
  double sigma = 0.2;
  double theta_deg = 0.0;
  int num_clusters = 5;
  int q = 10;
  int dim = 20;
  int points_per_cluster = 200;
  std::uint64_t seed = 0;

  // 5 clusters of 200 points on 10-dim subspaces of R^20.
  static SyntheticSpec noise_sweep(double sigma, std::uint64_t seed);
  // 3 planes in R^3 through a shared axis, 200 points each, sigma 0.1.
  static SyntheticSpec angle_sweep(double theta_deg, std::uint64_t seed);
};

// Orthonormalized (modified Gram-Schmidt) P x q Gaussian matrix.
Matrix random_frame(int dim, int q, std::mt19937_64& rng);

// Points are grouped by cluster: rows [k*m, (k+1)*m) belong to class k+1.
Dataset gen_noise_sweep(const SyntheticSpec& spec);
// Plane j is spanned by e1 and cos(j*theta) e2 + sin(j*theta) e3.  Throws
// kInvalidSpec when theta*(K-1) >= 180 or the shape is not q=2, P>=3.
Dataset gen_angle_sweep(const SyntheticSpec& spec);
Dataset generate(const SyntheticSpec& spec);

// The subspace frames used by the generators, for tests.
std::vector<Matrix> angle_sweep_frames(const SyntheticSpec& spec);

// Centers globally and projects onto the leading `dims` principal
// components.  Throws kRankDeficient when dims exceeds the numerical rank.
Dataset pca_preprocess(const Dataset& data, int dims);
inline int default_pca_dims(int num_clusters) { return 5 * num_clusters; }

// CSV and sidecar I/O.  Parse failures throw kParseError naming the line.
Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);
std::vector<int> read_label_file(const std::filesystem::path& path);
void write_label_file(const std::filesystem::path& path, const std::vector<int>& labels);

struct DatasetMeta {
  Payload payload;
  int k_true = 0;
};
DatasetMeta read_meta(const std::filesystem::path& path);
void write_meta(const std::filesystem::path& path, const DatasetMeta& meta);

// Loads `points_csv` plus the sibling .labels/.meta files when present.
Dataset load_dataset(const std::filesystem::path& points_csv);
// Writes stem.csv, stem.meta and (when truth is known) stem.labels.
void save_dataset(const std::filesystem::path& stem, const Dataset& data);

// Shortest round-trip text form of a double.
std::string format_double(double value);

}  // namespace subal
