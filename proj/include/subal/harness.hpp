#pragma once

// Active-learning experiment driver: initial clustering, then repeated
// score -> select -> ask oracle -> constrained update, recording one curve
// point per round.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subal/metrics.hpp"
#include "subal/spectral.hpp"
#include "subal/strategies.hpp"

namespace subal {

enum class InitKind { kKscBestOf, kLabelsFile };
enum class UpdateKind { kKscc, kSpectral };

struct ExperimentConfig {
  std::filesystem::path dataset;  // points CSV (siblings .labels/.meta)
  std::string dataset_name;       // defaults to the dataset stem
  Strategy strategy = Strategy::kScal;
  int num_clusters = 2;
  int q = 1;
  std::optional<std::size_t> budget;  // queried points; defaults to N
  std::size_t batch = 1;
  InitKind init = InitKind::kKscBestOf;
  int restarts = 50;
  std::filesystem::path init_labels;
  Centering centering = Centering::kOn;
  UpdateKind update = UpdateKind::kKscc;
  std::filesystem::path affinity;
  std::uint64_t seed = 0;
  std::filesystem::path output = "results";
  bool warm_start = true;
  int pca_dims = 0;  // 0 keeps the raw features
  NmiNormalization nmi = NmiNormalization::kArithmetic;
  double oracle_timeout_s = 0.0;  // 0 waits forever
  bool resume = false;

  // Throws kInvalidSpec for inconsistent settings (batch 0, spectral
  // without an affinity, labels_file without a path, ...).
  void validate() const;
};

// Flat key=value text; '#' starts a comment line.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);
// Unknown keys and malformed values throw kInvalidSpec.  `pca_dims` accepts
// an integer or "5K".
ExperimentConfig parse_config(const std::map<std::string, std::string>& kv);

// Source of class answers for queried points.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual int answer(PointId id) = 0;
};

class GroundTruthOracle : public Oracle {
 public:
  explicit GroundTruthOracle(std::vector<int> classes) : classes_(std::move(classes)) {}
  int answer(PointId id) override { return classes_.at(id); }

 private:
  std::vector<int> classes_;
};

// Replays recorded (id, class) answers in order, then defers to `live`.
// A query that differs from the recording throws kOracleError.
class ReplayOracle : public Oracle {
 public:
  ReplayOracle(std::vector<std::pair<PointId, int>> recorded, Oracle* live)
      : recorded_(std::move(recorded)), live_(live) {}
  int answer(PointId id) override;

 private:
  std::vector<std::pair<PointId, int>> recorded_;
  std::size_t next_ = 0;
  Oracle* live_;
};

struct ExperimentRecord {
  int iteration = 0;
  std::size_t n_queried = 0;
  std::optional<double> nmi;  // only when ground truth is known
  double objective = 0.0;
};

struct ExperimentCurve {
  std::string strategy;
  std::string dataset;
  std::uint64_t seed = 0;
  std::size_t num_points = 0;
  std::size_t budget = 0;
  std::vector<ExperimentRecord> records;
  LabelStore labels;
  Clustering final_clustering;

  std::vector<CurvePoint> nmi_curve() const;
  double queries_to_perfect_pct() const;
  double auc_pct() const;
};

struct ExperimentHooks {
  // After each record is appended (including the initial one).
  std::function<void(const ExperimentCurve&)> on_record;
};

// Inputs that the driver needs beyond the config.  `affinity` is required
// for the spectral update.
struct ExperimentInputs {
  const Dataset& data;
  const Matrix* affinity = nullptr;
};

// Runs until the budget is spent or, when ground truth is present, NMI
// reaches 1.  Oracle answers outside 1..K throw kOracleError.
ExperimentCurve run_experiment(const ExperimentConfig& config, const ExperimentInputs& inputs, Oracle& oracle,
                               const ExperimentHooks& hooks = {});

// Loads the dataset named by the config and applies PCA preprocessing.
Dataset load_experiment_data(const ExperimentConfig& config);

// Results files.  Curve CSV columns: strategy,dataset,seed,iteration,
// n_queried,nmi,objective.  Summary columns: strategy,dataset,seed,
// queries_to_perfect_pct,auc_pct.
std::string curve_csv(const ExperimentCurve& curve);
std::string summary_csv(const std::vector<ExperimentCurve>& curves);
// Two rows per dataset (queries-to-perfect %, AUC %), one column per
// strategy, averaged over seeds.
std::string summary_table(const std::vector<ExperimentCurve>& curves);

std::filesystem::path curve_path(const std::filesystem::path& dir, const ExperimentCurve& curve);
std::filesystem::path label_checkpoint_path(const std::filesystem::path& dir, const std::string& dataset,
                                            std::string_view strategy, std::uint64_t seed);

// Writes one curve CSV per run plus summary.csv into `dir`.  Returns the
// written paths.
std::vector<std::filesystem::path> emit_results(const std::vector<ExperimentCurve>& curves,
                                                const std::filesystem::path& dir);

void write_curve(const std::filesystem::path& dir, const ExperimentCurve& curve);
// summary_table() as dir/table.txt.
void write_summary_table(const std::filesystem::path& dir, const std::vector<ExperimentCurve>& curves);

// "point_id,class" lines in query order.
void write_label_checkpoint(const std::filesystem::path& path, const LabelStore& labels);
std::vector<std::pair<PointId, int>> read_label_checkpoint(const std::filesystem::path& path);

// run_experiment that rewrites the curve CSV and the label checkpoint in
// config.output after every record.  With config.resume, answers recorded
// in an existing checkpoint are replayed before `live` is consulted.
ExperimentCurve run_checkpointed(const ExperimentConfig& config, const ExperimentInputs& inputs, Oracle& live,
                                 const ExperimentHooks& hooks = {});

// Runs independent configurations with ground-truth oracles on a small
// thread pool; results keep the input order.  `persist` routes each cell
// through run_checkpointed.
std::vector<ExperimentCurve> run_batch(const std::vector<ExperimentConfig>& configs, const Dataset& data,
                                       const Matrix* affinity, unsigned threads = 0, bool persist = false);

}  // namespace subal
