#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "../support.hpp"
#include "subal/datagen.hpp"
#include "subal/error.hpp"
#include "subal/harness.hpp"

using namespace subal;
using namespace subal::testing;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Dataset angle_set(double sigma, std::uint64_t seed, int per = 20) {
  SyntheticSpec s = SyntheticSpec::angle_sweep(60.0, seed);
  s.sigma = sigma;
  s.points_per_cluster = per;
  return generate(s);
}

ExperimentConfig base_config(Strategy strategy, std::uint64_t seed) {
  ExperimentConfig c;
  c.dataset_name = "toy";
  c.strategy = strategy;
  c.num_clusters = 3;
  c.q = 2;
  c.restarts = 5;
  c.seed = seed;
  return c;
}

// Answers from the truth but fails after `limit` answers.
class FlakyOracle : public Oracle {
 public:
  FlakyOracle(std::vector<int> truth, std::size_t limit) : truth_(std::move(truth)), limit_(limit) {}
  int answer(PointId id) override {
    if (answered_++ >= limit_) throw Error(ErrorCode::kOracleError, "annotator went away");
    return truth_.at(id);
  }

 private:
  std::vector<int> truth_;
  std::size_t limit_;
  std::size_t answered_ = 0;
};

class ConstantOracle : public Oracle {
 public:
  explicit ConstantOracle(int cls) : cls_(cls) {}
  int answer(PointId) override { return cls_; }

 private:
  int cls_;
};

}  // namespace

TEST_CASE("config parsing") {
  std::map<std::string, std::string> kv{{"dataset", "data/faces.csv"}, {"strategy", "minmargin"}, {"K", "4"},
                                        {"q", "3"},      {"budget", "25"},   {"batch", "2"},
                                        {"centering", "off"}, {"pca_dims", "5K"}, {"nmi", "geometric"},
                                        {"warm_start", "false"}, {"seed", "17"}};
  const ExperimentConfig c = parse_config(kv);
  CHECK(c.dataset_name == "faces");
  CHECK(c.strategy == Strategy::kMinMargin);
  CHECK(c.num_clusters == 4);
  CHECK(c.budget == std::optional<std::size_t>(25));
  CHECK(c.batch == 2);
  CHECK(c.centering == Centering::kOff);
  CHECK(c.pca_dims == 20);
  CHECK(c.nmi == NmiNormalization::kGeometric);
  CHECK_FALSE(c.warm_start);
  CHECK(c.seed == 17);

  CHECK_FALSE(parse_config({{"budget", "N"}}).budget.has_value());
  CHECK_THROWS_AS(parse_config({{"colour", "red"}}), Error);
  CHECK_THROWS_AS(parse_config({{"K", "three"}}), Error);
  CHECK_THROWS_AS(parse_config({{"batch", "0"}}), Error);
  CHECK_THROWS_AS(parse_config({{"update", "spectral"}}), Error);
  CHECK_THROWS_AS(parse_config({{"init", "labels_file"}}), Error);
  CHECK_THROWS_AS(parse_config({{"strategy", "best"}}), Error);
}

TEST_CASE("key=value files") {
  TempDir dir("cfg");
  const auto p = dir.path() / "run.cfg";
  std::ofstream(p) << "# experiment\nK = 3\n\nstrategy=scal-d\n";
  const auto kv = read_key_values(p);
  CHECK(kv.at("K") == "3");
  CHECK(kv.at("strategy") == "scal-d");
  std::ofstream(p) << "K 3\n";
  CHECK_THROWS_AS(read_key_values(p), Error);
}

TEST_CASE("budget 0 gives the initial record only") {
  const Dataset d = angle_set(0.05, 1);
  ExperimentConfig c = base_config(Strategy::kScal, 1);
  c.budget = 0;
  GroundTruthOracle oracle(*d.true_classes);
  const auto curve = run_experiment(c, {d}, oracle);
  REQUIRE(curve.records.size() == 1);
  CHECK(curve.records[0].iteration == 0);
  CHECK(curve.records[0].n_queried == 0);
  CHECK(curve.records[0].nmi.has_value());
}

TEST_CASE("budget above N is rejected") {
  const Dataset d = angle_set(0.05, 1);
  ExperimentConfig c = base_config(Strategy::kScal, 1);
  c.budget = d.size() + 1;
  GroundTruthOracle oracle(*d.true_classes);
  CHECK_THROWS_AS(run_experiment(c, {d}, oracle), Error);
}

TEST_CASE("full budget ends at the truth for every strategy") {
  const Dataset d = angle_set(0.3, 2, 12);
  for (Strategy s : {Strategy::kScal, Strategy::kScalA, Strategy::kScalD, Strategy::kMaxResid, Strategy::kMinMargin,
                     Strategy::kRandom}) {
    ExperimentConfig c = base_config(s, 3);
    c.batch = 2;
    GroundTruthOracle oracle(*d.true_classes);
    const auto curve = run_experiment(c, {d}, oracle);
    CHECK(*curve.records.back().nmi == doctest::Approx(1.0));
    std::set<PointId> seen(curve.labels.query_order().begin(), curve.labels.query_order().end());
    CHECK(seen.size() == curve.labels.size());
    for (std::size_t i = 1; i < curve.records.size(); ++i) {
      CHECK(curve.records[i].iteration == static_cast<int>(i));
      CHECK(curve.records[i].n_queried > curve.records[i - 1].n_queried);
      CHECK(curve.records[i].n_queried - curve.records[i - 1].n_queried <= 2);
      CHECK(std::isfinite(curve.records[i].objective));
    }
    CHECK(constraints_hold(curve.final_clustering.assignment, curve.labels));
  }
}

TEST_CASE("human mode without truth runs the whole budget") {
  Dataset d = angle_set(0.05, 4, 10);
  const auto truth = *d.true_classes;
  d.true_classes.reset();
  ExperimentConfig c = base_config(Strategy::kScal, 0);
  c.budget = 7;
  GroundTruthOracle oracle(truth);
  const auto curve = run_experiment(c, {d}, oracle);
  CHECK(curve.labels.size() == 7);
  CHECK_FALSE(curve.records.back().nmi.has_value());
  CHECK(curve_csv(curve).find(",7,,") != std::string::npos);
}

TEST_CASE("runs are deterministic") {
  const Dataset d = angle_set(0.2, 5);
  const ExperimentConfig c = base_config(Strategy::kRandom, 9);
  GroundTruthOracle a(*d.true_classes), b(*d.true_classes);
  CHECK(curve_csv(run_experiment(c, {d}, a)) == curve_csv(run_experiment(c, {d}, b)));
}

TEST_CASE("warm and cold starts both satisfy constraints") {
  const Dataset d = angle_set(0.3, 6);
  ExperimentConfig c = base_config(Strategy::kScal, 2);
  c.warm_start = false;
  c.budget = 10;
  GroundTruthOracle oracle(*d.true_classes);
  const auto curve = run_experiment(c, {d}, oracle);
  CHECK(constraints_hold(curve.final_clustering.assignment, curve.labels));
}

TEST_CASE("labels-file initialization") {
  TempDir dir("init");
  const Dataset d = angle_set(0.05, 7);
  write_label_file(dir.path() / "init.labels", *d.true_classes);
  ExperimentConfig c = base_config(Strategy::kScal, 0);
  c.init = InitKind::kLabelsFile;
  c.init_labels = dir.path() / "init.labels";
  GroundTruthOracle oracle(*d.true_classes);
  const auto curve = run_experiment(c, {d}, oracle);
  CHECK(curve.records.size() == 1);
  CHECK(*curve.records[0].nmi == doctest::Approx(1.0));
}

TEST_CASE("invalid oracle answers abort with the partial curve persisted") {
  TempDir dir("partial");
  const Dataset d = angle_set(0.3, 8);
  ExperimentConfig c = base_config(Strategy::kScal, 1);
  c.output = dir.path();
  ConstantOracle bad(0);
  try {
    run_checkpointed(c, {d}, bad);
    FAIL("expected an oracle error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOracleError);
  }
  const std::string csv = slurp(dir.path() / "toy__scal__seed1.csv");
  CHECK(csv.rfind("strategy,dataset,seed,iteration,n_queried,nmi,objective\nscal,toy,1,0,0,", 0) == 0);
}

TEST_CASE("an interrupted run resumes to the same curve") {
  TempDir dir("resume");
  const Dataset d = angle_set(0.3, 9);
  ExperimentConfig c = base_config(Strategy::kScal, 4);
  c.output = dir.path() / "full";
  GroundTruthOracle truth(*d.true_classes);
  const auto full = run_checkpointed(c, {d}, truth);
  REQUIRE(full.labels.size() > 4);

  c.output = dir.path() / "cut";
  FlakyOracle flaky(*d.true_classes, 4);
  CHECK_THROWS_AS(run_checkpointed(c, {d}, flaky), Error);
  CHECK(read_label_checkpoint(label_checkpoint_path(c.output, "toy", "scal", 4)).size() == 4);

  c.resume = true;
  GroundTruthOracle rest(*d.true_classes);
  const auto resumed = run_checkpointed(c, {d}, rest);
  CHECK(curve_csv(resumed) == curve_csv(full));
  CHECK(slurp(dir.path() / "cut" / "toy__scal__seed4.csv") == slurp(dir.path() / "full" / "toy__scal__seed4.csv"));
}

TEST_CASE("replay oracle detects a diverged checkpoint") {
  ReplayOracle r({{3, 1}, {5, 2}}, nullptr);
  CHECK(r.answer(3) == 1);
  CHECK_THROWS_AS(r.answer(4), Error);
  ReplayOracle done({{3, 1}}, nullptr);
  done.answer(3);
  CHECK_THROWS_AS(done.answer(8), Error);
}

TEST_CASE("label checkpoint files") {
  TempDir dir("ckpt");
  LabelStore s(3);
  s.add(9, 2);
  s.add(1, 3);
  const auto p = dir.path() / "q.csv";
  write_label_checkpoint(p, s);
  CHECK(slurp(p) == "9,2\n1,3\n");
  const auto back = read_label_checkpoint(p);
  CHECK(back == std::vector<std::pair<PointId, int>>{{9, 2}, {1, 3}});
  std::ofstream(p) << "9;2\n";
  CHECK_THROWS_AS(read_label_checkpoint(p), Error);
}

TEST_CASE("emit_results golden bytes") {
  TempDir dir("golden");
  ExperimentCurve c;
  c.strategy = "scal";
  c.dataset = "toy";
  c.seed = 3;
  c.num_points = 4;
  c.records = {{0, 0, 0.5, 2.25}, {1, 1, 1.0, 0.125}};
  const auto files = emit_results({c}, dir.path());
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "toy__scal__seed3.csv");
  CHECK(slurp(files[0]) ==
        "strategy,dataset,seed,iteration,n_queried,nmi,objective\n"
        "scal,toy,3,0,0,0.5,2.25\n"
        "scal,toy,3,1,1,1,0.125\n");
  CHECK(files[1].filename() == "summary.csv");
  CHECK(slurp(files[1]) ==
        "strategy,dataset,seed,queries_to_perfect_pct,auc_pct\n"
        "scal,toy,3,25,93.75\n");
  // Re-emitting is bit-stable.
  emit_results({c}, dir.path());
  CHECK(slurp(files[1]) == "strategy,dataset,seed,queries_to_perfect_pct,auc_pct\nscal,toy,3,25,93.75\n");
  CHECK_THROWS_AS(emit_results({}, dir.path()), Error);
}

TEST_CASE("summary table has two rows per dataset") {
  ExperimentCurve a;
  a.strategy = "scal";
  a.dataset = "n0.2";
  a.num_points = 10;
  a.records = {{0, 0, 0.5, 1.0}, {1, 1, 1.0, 0.5}};
  ExperimentCurve b = a;
  b.strategy = "random";
  b.records = {{0, 0, 0.5, 1.0}, {1, 1, 0.8, 0.5}};
  ExperimentCurve c = a;
  c.seed = 1;
  c.records = {{0, 0, 1.0, 1.0}};
  const std::string t = summary_table({a, b, c});
  CHECK(t ==
        "dataset\tmetric\tscal\trandom\n"
        "n0.2\tqueries_to_perfect\t5.00%\t100.00%\n"
        "n0.2\tauc\t98.75%\t78.50%\n");
  CHECK(summary_csv({a, b, c}).find("scal,n0.2,1,0,100\n") != std::string::npos);
}

TEST_CASE("batch runner matches sequential runs") {
  const Dataset d = angle_set(0.2, 10, 15);
  std::vector<ExperimentConfig> configs;
  for (Strategy s : {Strategy::kScal, Strategy::kRandom})
    for (std::uint64_t seed : {0, 1}) configs.push_back(base_config(s, seed));
  const auto batch = run_batch(configs, d, nullptr, 3);
  REQUIRE(batch.size() == 4);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    GroundTruthOracle o(*d.true_classes);
    CHECK(curve_csv(batch[i]) == curve_csv(run_experiment(configs[i], {d}, o)));
  }
}

TEST_CASE("spectral update inside the loop") {
  const Dataset d = angle_set(0.1, 11, 10);
  Matrix w(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j)
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (*d.true_classes)[i] == (*d.true_classes)[j] ? 0.6 : 0.4;
  ExperimentConfig c = base_config(Strategy::kScal, 0);
  c.update = UpdateKind::kSpectral;
  c.affinity = "unused.csv";
  c.budget = 6;
  GroundTruthOracle oracle(*d.true_classes);
  const auto curve = run_experiment(c, {d, &w}, oracle);
  CHECK(constraints_hold(curve.final_clustering.assignment, curve.labels));
  ExperimentConfig missing = c;
  GroundTruthOracle o2(*d.true_classes);
  CHECK_THROWS_AS(run_experiment(missing, {d}, o2), Error);
}
