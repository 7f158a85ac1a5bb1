// subal: generate synthetic data, run active-learning experiments, serve
// queries to a human annotator, and evaluate clusterings.

#include <CLI11.hpp>

#include <atomic>
#include <charconv>
#include <csignal>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "subal/datagen.hpp"
#include "subal/error.hpp"
#include "subal/harness.hpp"
#include "subal/metrics.hpp"
#include "subal/oracle_service.hpp"

namespace fs = std::filesystem;
using namespace subal;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kInvalidSpec, "bad seed '" + s + "'");
  }
  return v;
}

// "3", "0-9" or "1,4,7".
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split(s, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(to_u64(part));
      continue;
    }
    const auto lo = to_u64(part.substr(0, dash));
    const auto hi = to_u64(part.substr(dash + 1));
    if (hi < lo) throw Error(ErrorCode::kInvalidSpec, "bad seed range '" + part + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidSpec, "empty seed list");
  return out;
}

// Config file, then --set pairs, then named flags.
struct ConfigSources {
  std::string file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> named;

  void add_to(CLI::App* cmd) {
    cmd->add_option("-c,--config", file, "key=value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override a config key (key=value), repeatable");
    for (const char* key : {"dataset", "strategy", "K", "q", "budget", "batch", "seed", "output", "init_labels",
                            "affinity", "update", "pca_dims"}) {
      cmd->add_option_function<std::string>(
          std::string("--") + key, [this, key](const std::string& v) { named[key] = v; },
          std::string("config key ") + key);
    }
    cmd->add_flag_function("--resume", [this](std::int64_t) { named["resume"] = "true"; },
                           "replay recorded answers from the label checkpoint");
  }

  std::map<std::string, std::string> merged() const {
    std::map<std::string, std::string> kv;
    if (!file.empty()) kv = read_key_values(file);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::kInvalidSpec, "--set expects key=value, got '" + s + "'");
      kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    for (const auto& [k, v] : named) kv[k] = v;
    return kv;
  }
};

int cmd_generate(const std::string& kind, double sigma, double theta, int k, int q, int dim, int per_cluster,
                 std::uint64_t seed, const std::string& out) {
  SyntheticSpec spec;
  if (kind == "noise") {
    spec = SyntheticSpec::noise_sweep(sigma >= 0 ? sigma : 0.2, seed);
  } else if (kind == "angle") {
    spec = SyntheticSpec::angle_sweep(theta, seed);
    spec.sigma = sigma >= 0 ? sigma : spec.sigma;
  } else {
    throw Error(ErrorCode::kInvalidSpec, "unknown kind '" + kind + "' (noise|angle)");
  }
  if (k > 0) spec.num_clusters = k;
  if (q > 0) spec.q = q;
  if (dim > 0) spec.dim = dim;
  if (per_cluster > 0) spec.points_per_cluster = per_cluster;
  const Dataset data = generate(spec);
  save_dataset(out, data);
  std::cout << "wrote " << out << ".csv (" << data.size() << " x " << data.dim() << ")\n";
  return 0;
}

int cmd_run(const ConfigSources& sources, unsigned threads) {
  auto kv = sources.merged();
  const auto datasets = split(kv.count("dataset") ? kv["dataset"] : std::string(), ',');
  const auto strategies = split(kv.count("strategy") ? kv["strategy"] : std::string("scal"), ',');
  const auto seeds = parse_seeds(kv.count("seed") ? kv["seed"] : std::string("0"));
  if (datasets.empty()) throw Error(ErrorCode::kInvalidSpec, "no dataset given");
  const bool named = kv.count("dataset_name") > 0;
  if (named && datasets.size() > 1) throw Error(ErrorCode::kInvalidSpec, "dataset_name needs a single dataset");

  std::vector<ExperimentCurve> curves;
  fs::path output;
  for (const auto& ds : datasets) {
    std::vector<ExperimentConfig> configs;
    for (const auto& st : strategies) {
      for (auto seed : seeds) {
        auto cell = kv;
        cell["dataset"] = ds;
        cell["strategy"] = st;
        cell["seed"] = std::to_string(seed);
        configs.push_back(parse_config(cell));
      }
    }
    const ExperimentConfig& first = configs.front();
    output = first.output;
    const Dataset data = load_experiment_data(first);
    std::optional<Matrix> affinity;
    if (first.update == UpdateKind::kSpectral) affinity = load_affinity(first.affinity.string());
    auto batch = run_batch(configs, data, affinity ? &*affinity : nullptr, threads, true);
    for (auto& c : batch) {
      std::cout << c.dataset << ' ' << c.strategy << " seed=" << c.seed << " queried=" << c.labels.size();
      if (!c.nmi_curve().empty()) {
        std::cout << " queries_to_perfect=" << format_double(c.queries_to_perfect_pct())
                  << "% auc=" << format_double(c.auc_pct()) << '%';
      }
      std::cout << '\n';
      curves.push_back(std::move(c));
    }
  }
  emit_results(curves, output);
  write_summary_table(output, curves);
  std::cout << summary_table(curves);
  return 0;
}

int cmd_serve(const ConfigSources& sources, const std::string& bind, const std::string& static_dir, bool with_truth) {
  const ExperimentConfig config = parse_config(sources.merged());
  Dataset data = load_experiment_data(config);
  Dataset display = load_dataset(config.dataset);
  if (!with_truth) data.true_classes.reset();
  std::optional<Matrix> affinity;
  if (config.update == UpdateKind::kSpectral) affinity = load_affinity(config.affinity.string());

  std::string host = "127.0.0.1";
  int port = 8080;
  if (!bind.empty()) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::kInvalidSpec, "--bind expects host:port");
    host = bind.substr(0, colon);
    port = static_cast<int>(to_u64(bind.substr(colon + 1)));
  }

  OracleService service(config, std::move(data), std::move(display), std::move(affinity), static_dir);
  const int bound = service.bind(host, port);
  std::cout << "serving on http://" << host << ':' << bound << "/" << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.start();
  while (!service.done() && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  if (g_interrupted) {
    service.stop();
    std::cout << "interrupted; rerun with --resume to continue\n";
    return 130;
  }
  const ExperimentCurve curve = service.wait();
  service.stop();
  std::cout << "done: " << curve.labels.size() << " labels, objective " << format_double(curve.records.back().objective)
            << '\n';
  return 0;
}

// Reads n_queried and nmi columns from a curve CSV.
std::vector<CurvePoint> read_curve(const fs::path& path, std::size_t num_points) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "strategy,dataset,seed,iteration,n_queried,nmi,objective") {
    throw Error(ErrorCode::kParseError, path.string() + ":1: not a curve CSV");
  }
  std::vector<CurvePoint> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = [&] {
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string item;
      while (std::getline(ss, item, ',')) f.push_back(item);
      return f;
    }();
    if (fields.size() != 7) throw Error(ErrorCode::kParseError, path.string() + ":" + std::to_string(line_no) + ": expected 7 fields");
    if (fields[5].empty()) throw Error(ErrorCode::kInvalidInput, path.string() + ": curve has no NMI (human-mode run)");
    out.push_back({static_cast<double>(to_u64(fields[4])) / static_cast<double>(num_points), std::stod(fields[5])});
  }
  return out;
}

int cmd_eval(const std::string& labels, const std::string& truth, const std::string& norm, const std::string& curve,
             std::size_t num_points) {
  if (!curve.empty()) {
    if (num_points == 0) throw Error(ErrorCode::kInvalidSpec, "--curve needs --n (number of points)");
    const auto points = read_curve(curve, num_points);
    std::cout << "queries_to_perfect_pct=" << format_double(queries_to_perfect(points)) << '\n'
              << "auc_pct=" << format_double(auc(points)) << '\n';
    return 0;
  }
  if (labels.empty() || truth.empty()) throw Error(ErrorCode::kInvalidSpec, "eval needs --labels and --truth, or --curve");
  const NmiNormalization n = norm == "geometric" ? NmiNormalization::kGeometric : NmiNormalization::kArithmetic;
  if (norm != "geometric" && norm != "arithmetic") throw Error(ErrorCode::kInvalidSpec, "bad --nmi '" + norm + "'");
  const auto a = read_label_file(labels);
  const auto b = read_label_file(truth);
  const double v = nmi(a, b, n);
  std::cout << "nmi=" << format_double(v) << '\n' << "perfect=" << (is_perfect(v) ? "true" : "false") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active learning for subspace clustering"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "write a synthetic union-of-subspaces dataset");
  std::string kind = "noise", out;
  double sigma = -1.0, theta = 30.0;
  int k = 0, q = 0, dim = 0, per_cluster = 0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--kind", kind, "noise | angle")->capture_default_str();
  gen->add_option("--sigma", sigma, "noise standard deviation (default 0.2 noise, 0.1 angle)");
  gen->add_option("--theta", theta, "angle between adjacent planes in degrees")->capture_default_str();
  gen->add_option("--K", k, "number of subspaces");
  gen->add_option("--q", q, "subspace dimension");
  gen->add_option("--dim", dim, "ambient dimension");
  gen->add_option("--per-cluster", per_cluster, "points per subspace");
  gen->add_option("--seed", gen_seed, "random seed")->capture_default_str();
  gen->add_option("-o,--out", out, "output stem (writes STEM.csv, STEM.labels, STEM.meta)")->required();

  auto* run = app.add_subcommand("run", "run benchmark experiments with a ground-truth oracle");
  ConfigSources run_sources;
  run_sources.add_to(run);
  unsigned threads = 0;
  run->add_option("-j,--threads", threads, "worker threads (0 = hardware concurrency)");
  run->footer("strategy, seed and dataset accept comma-separated lists; seed also accepts ranges like 0-9.");

  auto* serve = app.add_subcommand("serve", "serve queries to a human annotator over HTTP");
  ConfigSources serve_sources;
  serve_sources.add_to(serve);
  std::string bind, static_dir;
  bool with_truth = false;
  serve->add_option("--bind", bind, "host:port (default 127.0.0.1:8080, port 0 picks one)");
  serve->add_option("--static-dir", static_dir, "directory served at / (annotator UI)")->check(CLI::ExistingDirectory);
  serve->add_flag("--with-truth", with_truth, "use dataset labels for NMI and early stopping");

  auto* eval = app.add_subcommand("eval", "score a clustering or a results curve");
  std::string labels, truth, norm = "arithmetic", curve;
  std::size_t num_points = 0;
  eval->add_option("--labels", labels, "predicted labels, one per line")->check(CLI::ExistingFile);
  eval->add_option("--truth", truth, "true labels, one per line")->check(CLI::ExistingFile);
  eval->add_option("--nmi", norm, "arithmetic | geometric")->capture_default_str();
  eval->add_option("--curve", curve, "curve CSV written by run")->check(CLI::ExistingFile);
  eval->add_option("--n", num_points, "number of points in the dataset (with --curve)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(kind, sigma, theta, k, q, dim, per_cluster, gen_seed, out);
    if (*run) return cmd_run(run_sources, threads);
    if (*serve) return cmd_serve(serve_sources, bind, static_dir, with_truth);
    if (*eval) return cmd_eval(labels, truth, norm, curve, num_points);
  } catch (const std::exception& e) {
    std::cerr << "subal: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
