#include "subal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "subal/datagen.hpp"
#include "subal/error.hpp"

namespace subal {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad_config(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kInvalidSpec, "config: bad value '" + value + "' for key '" + key + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad_config(key, value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "off" || value == "0" || value == "no") return false;
  bad_config(key, value);
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::mt19937_64 strategy_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5ca1u};
  return std::mt19937_64(seq);
}

std::string nmi_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

void ExperimentConfig::validate() const {
  if (num_clusters < 2) throw Error(ErrorCode::kInvalidSpec, "K must be at least 2");
  if (q < 1) throw Error(ErrorCode::kInvalidSpec, "q must be at least 1");
  if (batch < 1) throw Error(ErrorCode::kInvalidSpec, "batch must be at least 1");
  if (restarts < 1) throw Error(ErrorCode::kInvalidSpec, "restarts must be at least 1");
  if (init == InitKind::kLabelsFile && init_labels.empty()) {
    throw Error(ErrorCode::kInvalidSpec, "init=labels_file needs init_labels");
  }
  if (update == UpdateKind::kSpectral && affinity.empty()) {
    throw Error(ErrorCode::kInvalidSpec, "update=spectral needs an affinity path");
  }
  if (pca_dims < 0) throw Error(ErrorCode::kInvalidSpec, "pca_dims must be >= 0");
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError, path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    kv[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
  }
  return kv;
}

ExperimentConfig parse_config(const std::map<std::string, std::string>& kv) {
  ExperimentConfig c;
  std::optional<std::string> pca;
  for (const auto& [key, value] : kv) {
    if (key == "dataset") {
      c.dataset = value;
    } else if (key == "dataset_name") {
      c.dataset_name = value;
    } else if (key == "strategy") {
      const auto s = parse_strategy(value);
      if (!s) bad_config(key, value);
      c.strategy = *s;
    } else if (key == "K") {
      c.num_clusters = parse_number<int>(key, value);
    } else if (key == "q") {
      c.q = parse_number<int>(key, value);
    } else if (key == "budget") {
      if (value == "N" || value == "all") c.budget.reset();
      else c.budget = parse_number<std::size_t>(key, value);
    } else if (key == "batch") {
      c.batch = parse_number<std::size_t>(key, value);
    } else if (key == "init") {
      if (value == "ksc_best_of") c.init = InitKind::kKscBestOf;
      else if (value == "labels_file") c.init = InitKind::kLabelsFile;
      else bad_config(key, value);
    } else if (key == "restarts") {
      c.restarts = parse_number<int>(key, value);
    } else if (key == "init_labels") {
      c.init_labels = value;
    } else if (key == "centering") {
      c.centering = parse_bool(key, value) ? Centering::kOn : Centering::kOff;
    } else if (key == "update") {
      if (value == "kscc") c.update = UpdateKind::kKscc;
      else if (value == "spectral") c.update = UpdateKind::kSpectral;
      else bad_config(key, value);
    } else if (key == "affinity") {
      c.affinity = value;
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "output") {
      c.output = value;
    } else if (key == "warm_start") {
      c.warm_start = parse_bool(key, value);
    } else if (key == "pca_dims") {
      pca = value;
    } else if (key == "nmi") {
      if (value == "arithmetic") c.nmi = NmiNormalization::kArithmetic;
      else if (value == "geometric") c.nmi = NmiNormalization::kGeometric;
      else bad_config(key, value);
    } else if (key == "oracle_timeout_s") {
      c.oracle_timeout_s = parse_number<double>(key, value);
    } else if (key == "resume") {
      c.resume = parse_bool(key, value);
    } else {
      throw Error(ErrorCode::kInvalidSpec, "config: unknown key '" + key + "'");
    }
  }
  if (pca) {
    if (*pca == "5K") c.pca_dims = default_pca_dims(c.num_clusters);
    else c.pca_dims = parse_number<int>("pca_dims", *pca);
  }
  if (c.dataset_name.empty() && !c.dataset.empty()) c.dataset_name = c.dataset.stem().string();
  c.validate();
  return c;
}

int ReplayOracle::answer(PointId id) {
  if (next_ < recorded_.size()) {
    const auto [expected, cls] = recorded_[next_];
    if (expected != id) {
      throw Error(ErrorCode::kOracleError, "checkpoint diverged: recorded point " + std::to_string(expected) +
                                               ", run asked for " + std::to_string(id));
    }
    ++next_;
    return cls;
  }
  if (!live_) throw Error(ErrorCode::kOracleError, "no live oracle after the recorded answers");
  return live_->answer(id);
}

std::vector<CurvePoint> ExperimentCurve::nmi_curve() const {
  std::vector<CurvePoint> out;
  for (const auto& r : records) {
    if (!r.nmi) continue;
    out.push_back({static_cast<double>(r.n_queried) / static_cast<double>(num_points), *r.nmi});
  }
  return out;
}

double ExperimentCurve::queries_to_perfect_pct() const {
  const auto c = nmi_curve();
  return queries_to_perfect(c);
}

double ExperimentCurve::auc_pct() const {
  const auto c = nmi_curve();
  return auc(c);
}

Dataset load_experiment_data(const ExperimentConfig& config) {
  Dataset data = load_dataset(config.dataset);
  if (config.pca_dims > 0) data = pca_preprocess(data, config.pca_dims);
  return data;
}

ExperimentCurve run_experiment(const ExperimentConfig& config, const ExperimentInputs& inputs, Oracle& oracle,
                               const ExperimentHooks& hooks) {
  config.validate();
  const Dataset& data = inputs.data;
  const int k = config.num_clusters;
  data.validate(k);
  if (config.q >= static_cast<int>(data.dim())) throw Error(ErrorCode::kInvalidSpec, "q must be below the dimension");
  if (config.update == UpdateKind::kSpectral && !inputs.affinity) {
    throw Error(ErrorCode::kInvalidSpec, "spectral update without an affinity matrix");
  }
  const Matrix& x = data.points;
  const std::size_t n = data.size();

  KsccOptions options;
  options.centering = config.centering;

  ExperimentCurve curve;
  curve.strategy = std::string(to_string(config.strategy));
  curve.dataset = config.dataset_name.empty() ? std::string("dataset") : config.dataset_name;
  curve.seed = config.seed;
  curve.num_points = n;
  if (config.budget && *config.budget > n) {
    throw Error(ErrorCode::kInvalidSpec, "budget " + std::to_string(*config.budget) + " exceeds N = " + std::to_string(n));
  }
  curve.budget = config.budget.value_or(n);
  curve.labels = LabelStore(k);

  Clustering clustering;
  std::vector<SubspaceModel> models;
  if (config.init == InitKind::kKscBestOf) {
    KscResult init = best_of_restarts(x, k, config.q, config.restarts, config.seed, options);
    clustering = std::move(init.clustering);
    models = std::move(init.models);
  } else {
    const auto labels = read_label_file(config.init_labels);
    if (labels.size() != n) throw Error(ErrorCode::kInvalidInput, "init_labels length does not match the data");
    clustering.assignment.reserve(n);
    for (int c : labels) {
      if (c > k) throw Error(ErrorCode::kInvalidInput, "init_labels has a cluster above K");
      clustering.assignment.push_back(c - 1);
    }
    models = fit_models(x, clustering.assignment, k, config.q, config.centering);
    clustering.objective = total_loss(x, models, clustering.assignment);
  }
  const Clustering initial = clustering;

  const auto measure = [&](const Clustering& c) -> std::optional<double> {
    if (!data.true_classes) return std::nullopt;
    return nmi(c.assignment, *data.true_classes, config.nmi);
  };
  const auto push_record = [&](int iteration) {
    curve.records.push_back({iteration, curve.labels.size(), measure(clustering), clustering.objective});
    curve.final_clustering = clustering;
    if (hooks.on_record) hooks.on_record(curve);
  };
  push_record(0);

  std::mt19937_64 rng = strategy_rng(config.seed);
  int iteration = 0;
  while (curve.labels.size() < curve.budget) {
    const auto& last = curve.records.back();
    if (last.nmi && is_perfect(*last.nmi)) break;

    const InfluenceScores scores = score_all(x, models, clustering, curve.labels);
    const std::size_t want = std::min(config.batch, curve.budget - curve.labels.size());
    for (PointId id : select_batch(config.strategy, scores, want, rng)) {
      const int cls = oracle.answer(id);
      if (cls < 1 || cls > k) {
        throw Error(ErrorCode::kOracleError, "oracle answered class " + std::to_string(cls) + " for point " +
                                                 std::to_string(id));
      }
      curve.labels.add(id, cls);
    }

    const Clustering& start = config.warm_start ? clustering : initial;
    KsccResult updated;
    if (config.update == UpdateKind::kSpectral) {
      SpectralOptions so;
      so.seed = config.seed;
      updated = spectral_active_step(x, *inputs.affinity, curve.labels, k, config.q, so, options).refined;
    } else {
      updated = run_kscc(x, k, config.q, start, curve.labels, options);
    }
    clustering = std::move(updated.clustering);
    models = std::move(updated.models);
    push_record(++iteration);
  }
  return curve;
}

std::string curve_csv(const ExperimentCurve& curve) {
  std::ostringstream out;
  out << "strategy,dataset,seed,iteration,n_queried,nmi,objective\n";
  for (const auto& r : curve.records) {
    out << curve.strategy << ',' << curve.dataset << ',' << curve.seed << ',' << r.iteration << ','
        << r.n_queried << ',' << nmi_field(r.nmi) << ',' << format_double(r.objective) << '\n';
  }
  return out.str();
}

std::string summary_csv(const std::vector<ExperimentCurve>& curves) {
  std::ostringstream out;
  out << "strategy,dataset,seed,queries_to_perfect_pct,auc_pct\n";
  for (const auto& c : curves) {
    const bool known = !c.nmi_curve().empty();
    out << c.strategy << ',' << c.dataset << ',' << c.seed << ','
        << (known ? format_double(c.queries_to_perfect_pct()) : std::string()) << ','
        << (known ? format_double(c.auc_pct()) : std::string()) << '\n';
  }
  return out.str();
}

std::string summary_table(const std::vector<ExperimentCurve>& curves) {
  std::vector<std::string> datasets, strategies;
  std::map<std::pair<std::string, std::string>, std::vector<const ExperimentCurve*>> cells;
  for (const auto& c : curves) {
    if (std::find(datasets.begin(), datasets.end(), c.dataset) == datasets.end()) datasets.push_back(c.dataset);
    if (std::find(strategies.begin(), strategies.end(), c.strategy) == strategies.end()) strategies.push_back(c.strategy);
    cells[{c.dataset, c.strategy}].push_back(&c);
  }
  const auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "dataset\tmetric";
  for (const auto& s : strategies) out << '\t' << s;
  out << '\n';
  for (const auto& d : datasets) {
    for (int row = 0; row < 2; ++row) {
      out << d << '\t' << (row == 0 ? "queries_to_perfect" : "auc");
      for (const auto& s : strategies) {
        const auto it = cells.find({d, s});
        if (it == cells.end()) {
          out << "\t-";
          continue;
        }
        double sum = 0.0;
        for (const auto* c : it->second) sum += row == 0 ? c->queries_to_perfect_pct() : c->auc_pct();
        out << '\t' << pct(sum / static_cast<double>(it->second.size()));
      }
      out << '\n';
    }
  }
  return out.str();
}

fs::path curve_path(const fs::path& dir, const ExperimentCurve& curve) {
  return dir / (curve.dataset + "__" + curve.strategy + "__seed" + std::to_string(curve.seed) + ".csv");
}

fs::path label_checkpoint_path(const fs::path& dir, const std::string& dataset, std::string_view strategy,
                               std::uint64_t seed) {
  return dir / (dataset + "__" + std::string(strategy) + "__seed" + std::to_string(seed) + ".queries.csv");
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  // Write-then-rename so a crash never leaves a truncated checkpoint.
  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::kIoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void write_summary_table(const fs::path& dir, const std::vector<ExperimentCurve>& curves) {
  ensure_dir(dir);
  write_text(dir / "table.txt", summary_table(curves));
}

void write_curve(const fs::path& dir, const ExperimentCurve& curve) {
  ensure_dir(dir);
  write_text(curve_path(dir, curve), curve_csv(curve));
}

std::vector<fs::path> emit_results(const std::vector<ExperimentCurve>& curves, const fs::path& dir) {
  if (curves.empty()) throw Error(ErrorCode::kInvalidInput, "emit_results: no curves");
  ensure_dir(dir);
  std::vector<fs::path> written;
  for (const auto& c : curves) {
    written.push_back(curve_path(dir, c));
    write_text(written.back(), curve_csv(c));
  }
  written.push_back(dir / "summary.csv");
  write_text(written.back(), summary_csv(curves));
  return written;
}

void write_label_checkpoint(const fs::path& path, const LabelStore& labels) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ostringstream out;
  for (PointId id : labels.query_order()) out << id << ',' << labels.class_of(id) << '\n';
  write_text(path, out.str());
}

std::vector<std::pair<PointId, int>> read_label_checkpoint(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::pair<PointId, int>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto comma = body.find(',');
    PointId id = 0;
    int cls = 0;
    bool ok = comma != std::string::npos;
    if (ok) {
      const auto a = std::from_chars(body.data(), body.data() + comma, id);
      const auto b = std::from_chars(body.data() + comma + 1, body.data() + body.size(), cls);
      ok = a.ec == std::errc() && a.ptr == body.data() + comma && b.ec == std::errc() &&
           b.ptr == body.data() + body.size();
    }
    if (!ok) throw Error(ErrorCode::kParseError, path.string() + ":" + std::to_string(line_no) + ": expected id,class");
    out.emplace_back(id, cls);
  }
  return out;
}

ExperimentCurve run_checkpointed(const ExperimentConfig& config, const ExperimentInputs& inputs, Oracle& live,
                                 const ExperimentHooks& hooks) {
  const std::string name = config.dataset_name.empty() ? std::string("dataset") : config.dataset_name;
  const fs::path checkpoint = label_checkpoint_path(config.output, name, to_string(config.strategy), config.seed);
  std::vector<std::pair<PointId, int>> recorded;
  if (config.resume && fs::exists(checkpoint)) recorded = read_label_checkpoint(checkpoint);
  ReplayOracle oracle(std::move(recorded), &live);

  ExperimentHooks persisting;
  persisting.on_record = [&](const ExperimentCurve& curve) {
    write_curve(config.output, curve);
    write_label_checkpoint(checkpoint, curve.labels);
    if (hooks.on_record) hooks.on_record(curve);
  };
  return run_experiment(config, inputs, oracle, persisting);
}

std::vector<ExperimentCurve> run_batch(const std::vector<ExperimentConfig>& configs, const Dataset& data,
                                       const Matrix* affinity, unsigned threads, bool persist) {
  std::vector<ExperimentCurve> out(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, configs.size())));
  if (!data.true_classes) throw Error(ErrorCode::kInvalidInput, "run_batch needs ground-truth classes");

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        GroundTruthOracle oracle(*data.true_classes);
        const ExperimentInputs inputs{data, affinity};
        out[i] = persist ? run_checkpointed(configs[i], inputs, oracle) : run_experiment(configs[i], inputs, oracle);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace subal
