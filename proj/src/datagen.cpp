#include "subal/datagen.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string_view>

#include "subal/error.hpp"

namespace subal {
namespace fs = std::filesystem;

namespace {

constexpr double kRankTolerance = 1e-10;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void parse_error(const fs::path& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParseError, path.string() + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

void check_shape(const SyntheticSpec& spec) {
  if (spec.num_clusters < 1 || spec.q < 1 || spec.dim <= spec.q || spec.points_per_cluster < 2) {
    throw Error(ErrorCode::kInvalidSpec, "need K >= 1, 1 <= q < P and at least 2 points per cluster");
  }
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) throw Error(ErrorCode::kInvalidSpec, "sigma must be >= 0");
}

Dataset sample_union(const std::vector<Matrix>& frames, const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int m = spec.points_per_cluster;
  Dataset data;
  data.points.resize(static_cast<Eigen::Index>(frames.size()) * m, spec.dim);
  std::vector<int> classes;
  classes.reserve(static_cast<std::size_t>(data.points.rows()));
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Matrix& frame = frames[k];
    for (int i = 0; i < m; ++i, ++row) {
      Vector coords(frame.cols());
      for (auto& c : coords) c = normal(rng);
      Vector noise(spec.dim);
      for (auto& e : noise) e = normal(rng);
      data.points.row(row) = (frame * coords + spec.sigma * noise).transpose();
      classes.push_back(static_cast<int>(k) + 1);
    }
  }
  data.true_classes = std::move(classes);
  return data;
}

std::string_view kind_name(PayloadKind k) {
  switch (k) {
    case PayloadKind::kFeatures: return "features";
    case PayloadKind::kGrayscaleImage: return "grayscale_image";
    case PayloadKind::kTrajectory: return "trajectory";
  }
  return "features";
}

}  // namespace

SyntheticSpec SyntheticSpec::noise_sweep(double sigma, std::uint64_t seed) {
  SyntheticSpec s;
  s.kind = SyntheticKind::kNoiseSweep;
  s.sigma = sigma;
  s.seed = seed;
  return s;
}

SyntheticSpec SyntheticSpec::angle_sweep(double theta_deg, std::uint64_t seed) {
  SyntheticSpec s;
  s.kind = SyntheticKind::kAngleSweep;
  s.sigma = 0.1;
  s.theta_deg = theta_deg;
  s.num_clusters = 3;
  s.q = 2;
  s.dim = 3;
  s.seed = seed;
  return s;
}

Matrix random_frame(int dim, int q, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix frame(dim, q);
  for (Eigen::Index j = 0; j < frame.cols(); ++j) {
    for (Eigen::Index i = 0; i < frame.rows(); ++i) frame(i, j) = normal(rng);
  }
  for (Eigen::Index j = 0; j < frame.cols(); ++j) {
    for (Eigen::Index p = 0; p < j; ++p) frame.col(j) -= frame.col(p).dot(frame.col(j)) * frame.col(p);
    const double norm = frame.col(j).norm();
    if (norm < 1e-12) throw Error(ErrorCode::kInvalidSpec, "random_frame: degenerate draw");
    frame.col(j) /= norm;
  }
  return frame;
}

Dataset gen_noise_sweep(const SyntheticSpec& spec) {
  if (spec.kind != SyntheticKind::kNoiseSweep) throw Error(ErrorCode::kInvalidSpec, "expected a noise_sweep spec");
  check_shape(spec);
  std::mt19937_64 rng(spec.seed);
  std::vector<Matrix> frames;
  for (int k = 0; k < spec.num_clusters; ++k) frames.push_back(random_frame(spec.dim, spec.q, rng));
  return sample_union(frames, spec, rng);
}

std::vector<Matrix> angle_sweep_frames(const SyntheticSpec& spec) {
  check_shape(spec);
  if (spec.q != 2 || spec.dim < 3) throw Error(ErrorCode::kInvalidSpec, "angle_sweep needs q = 2 and P >= 3");
  if (!(spec.theta_deg > 0.0) || spec.theta_deg * (spec.num_clusters - 1) >= 180.0) {
    throw Error(ErrorCode::kInvalidSpec, "angle_sweep needs 0 < theta and theta*(K-1) < 180");
  }
  std::vector<Matrix> frames;
  for (int j = 0; j < spec.num_clusters; ++j) {
    const double angle = j * spec.theta_deg * std::numbers::pi / 180.0;
    Matrix frame = Matrix::Zero(spec.dim, 2);
    frame(0, 0) = 1.0;
    frame(1, 1) = std::cos(angle);
    frame(2, 1) = std::sin(angle);
    frames.push_back(std::move(frame));
  }
  return frames;
}

Dataset gen_angle_sweep(const SyntheticSpec& spec) {
  if (spec.kind != SyntheticKind::kAngleSweep) throw Error(ErrorCode::kInvalidSpec, "expected an angle_sweep spec");
  const auto frames = angle_sweep_frames(spec);
  std::mt19937_64 rng(spec.seed);
  return sample_union(frames, spec, rng);
}

Dataset generate(const SyntheticSpec& spec) {
  return spec.kind == SyntheticKind::kNoiseSweep ? gen_noise_sweep(spec) : gen_angle_sweep(spec);
}

Dataset pca_preprocess(const Dataset& data, int dims) {
  if (dims < 1 || dims > static_cast<int>(data.dim())) {
    throw Error(ErrorCode::kInvalidInput, "pca_preprocess: dims must lie in 1..P");
  }
  const Moments m = covariance(data.points);
  const EigenDecomposition eig = sym_eigen(m.cov, EigenMethod::kAuto);
  const double top = std::max(eig.values[0], 0.0);
  int rank = 0;
  for (Eigen::Index j = 0; j < eig.values.size(); ++j) {
    if (eig.values[j] > kRankTolerance * top) ++rank;
  }
  if (dims > rank) {
    throw Error(ErrorCode::kRankDeficient,
                "pca_preprocess: " + std::to_string(dims) + " dims requested, rank is " + std::to_string(rank));
  }
  Dataset out;
  out.points = (data.points.rowwise() - m.mean.transpose()) * eig.vectors.leftCols(dims);
  out.true_classes = data.true_classes;
  out.payload = data.payload;
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

Matrix read_csv_matrix(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<double> values;
  Eigen::Index cols = -1;
  Eigen::Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    Eigen::Index count = 0;
    std::size_t start = 0;
    while (start <= body.size()) {
      const std::size_t comma = body.find(',', start);
      const std::string_view field = trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        parse_error(path, line_no, "bad number '" + std::string(field) + "'");
      }
      if (!std::isfinite(v)) parse_error(path, line_no, "non-finite value");
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols < 0) cols = count;
    if (count != cols) {
      parse_error(path, line_no, "expected " + std::to_string(cols) + " columns, found " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) parse_error(path, line_no, "no data rows");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

void write_csv_matrix(const fs::path& path, const Matrix& m) {
  std::ofstream out = open_out(path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::vector<int> read_label_file(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    int v = 0;
    const auto res = std::from_chars(body.data(), body.data() + body.size(), v);
    if (res.ec != std::errc() || res.ptr != body.data() + body.size()) {
      parse_error(path, line_no, "bad label '" + std::string(body) + "'");
    }
    if (v < 1) parse_error(path, line_no, "labels are 1-based");
    labels.push_back(v);
  }
  return labels;
}

void write_label_file(const fs::path& path, const std::vector<int>& labels) {
  std::ofstream out = open_out(path);
  for (int v : labels) out << v << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

DatasetMeta read_meta(const fs::path& path) {
  std::ifstream in = open_in(path);
  DatasetMeta meta;
  std::string line;
  std::size_t line_no = 0;
  const auto to_int = [&](std::string_view v) {
    int out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) parse_error(path, line_no, "bad integer");
    return out;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) parse_error(path, line_no, "expected key=value");
    const std::string_view key = trim(body.substr(0, eq));
    const std::string_view value = trim(body.substr(eq + 1));
    if (key == "kind") {
      if (value == "features") meta.payload.kind = PayloadKind::kFeatures;
      else if (value == "grayscale_image") meta.payload.kind = PayloadKind::kGrayscaleImage;
      else if (value == "trajectory") meta.payload.kind = PayloadKind::kTrajectory;
      else parse_error(path, line_no, "unknown kind '" + std::string(value) + "'");
    } else if (key == "height") {
      meta.payload.height = to_int(value);
    } else if (key == "width") {
      meta.payload.width = to_int(value);
    } else if (key == "frames") {
      meta.payload.frames = to_int(value);
    } else if (key == "K_true") {
      meta.k_true = to_int(value);
    } else {
      parse_error(path, line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  return meta;
}

void write_meta(const fs::path& path, const DatasetMeta& meta) {
  std::ofstream out = open_out(path);
  out << "kind=" << kind_name(meta.payload.kind) << '\n';
  if (meta.payload.kind == PayloadKind::kGrayscaleImage) {
    out << "height=" << meta.payload.height << '\n' << "width=" << meta.payload.width << '\n';
  }
  if (meta.payload.kind == PayloadKind::kTrajectory) out << "frames=" << meta.payload.frames << '\n';
  if (meta.k_true > 0) out << "K_true=" << meta.k_true << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

Dataset load_dataset(const fs::path& points_csv) {
  Dataset data;
  data.points = read_csv_matrix(points_csv);
  const fs::path labels = fs::path(points_csv).replace_extension(".labels");
  const fs::path meta = fs::path(points_csv).replace_extension(".meta");
  if (fs::exists(labels)) {
    auto classes = read_label_file(labels);
    if (classes.size() != data.size()) {
      throw Error(ErrorCode::kParseError, labels.string() + ": " + std::to_string(classes.size()) +
                                              " labels for " + std::to_string(data.size()) + " points");
    }
    data.true_classes = std::move(classes);
  }
  if (fs::exists(meta)) {
    const DatasetMeta m = read_meta(meta);
    data.payload = m.payload;
    if (m.payload.kind == PayloadKind::kGrayscaleImage &&
        static_cast<std::size_t>(m.payload.height) * static_cast<std::size_t>(m.payload.width) != data.dim()) {
      throw Error(ErrorCode::kParseError, meta.string() + ": height*width does not match the point dimension");
    }
  }
  return data;
}

void save_dataset(const fs::path& stem, const Dataset& data) {
  const fs::path base = stem.parent_path() / stem.filename();
  write_csv_matrix(fs::path(base).concat(".csv"), data.points);
  DatasetMeta meta;
  meta.payload = data.payload;
  if (data.true_classes) {
    int k = 0;
    for (int c : *data.true_classes) k = std::max(k, c);
    meta.k_true = k;
    write_label_file(fs::path(base).concat(".labels"), *data.true_classes);
  }
  write_meta(fs::path(base).concat(".meta"), meta);
}

}  // namespace subal
