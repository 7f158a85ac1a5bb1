#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "subal/datagen.hpp"
#include "subal/error.hpp"
#include "subal/harness.hpp"
#include "subal/influence.hpp"
#include "subal/ksc.hpp"
#include "subal/kscc.hpp"
#include "subal/metrics.hpp"
#include "subal/numkit.hpp"
#include "subal/spectral.hpp"
#include "subal/strategies.hpp"

namespace py = pybind11;
using namespace subal;

namespace {

// Python passes labels as {point_id: class}; insertion order is the query
// order.
LabelStore to_labels(const std::vector<std::pair<PointId, int>>& pairs, int num_classes) {
  LabelStore store(num_classes);
  for (const auto& [id, cls] : pairs) store.add(id, cls);
  return store;
}

std::vector<std::pair<PointId, int>> label_pairs(const py::dict& d) {
  std::vector<std::pair<PointId, int>> out;
  for (const auto& [k, v] : d) out.emplace_back(k.cast<PointId>(), v.cast<int>());
  return out;
}

Clustering to_clustering(const std::vector<int>& assignment) {
  Clustering c;
  c.assignment = assignment;
  return c;
}

Strategy strategy_of(const std::string& name) {
  const auto s = parse_strategy(name);
  if (!s) throw Error(ErrorCode::kInvalidSpec, "unknown strategy '" + name + "'");
  return *s;
}

Centering centering_of(bool centered) { return centered ? Centering::kOn : Centering::kOff; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Active learning for subspace clustering";

  py::register_exception<Error>(m, "SubalError", PyExc_RuntimeError);

  py::class_<SubspaceModel>(m, "SubspaceModel")
      .def_readonly("mean", &SubspaceModel::mean)
      .def_readonly("eigenvectors", &SubspaceModel::eigenvectors)
      .def_readonly("spectrum", &SubspaceModel::spectrum)
      .def_readonly("basis_dim", &SubspaceModel::basis_dim)
      .def_readonly("size", &SubspaceModel::size)
      .def("basis", [](const SubspaceModel& s) { return Matrix(s.basis()); })
      .def("reconstruction_loss", [](const SubspaceModel& s, const Vector& x) { return reconstruction_loss(x, s); });

  py::class_<Clustering>(m, "Clustering")
      .def_readonly("assignment", &Clustering::assignment)
      .def_readonly("objective", &Clustering::objective);

  py::class_<KscResult>(m, "KscResult")
      .def_readonly("clustering", &KscResult::clustering)
      .def_readonly("models", &KscResult::models)
      .def_readonly("trace", &KscResult::trace)
      .def_readonly("iterations", &KscResult::iterations);

  py::class_<KsccResult>(m, "KsccResult")
      .def_readonly("clustering", &KsccResult::clustering)
      .def_readonly("models", &KsccResult::models)
      .def_readonly("trace", &KsccResult::trace)
      .def_readonly("iterations", &KsccResult::iterations)
      .def_property_readonly("cluster_of_class", [](const KsccResult& r) { return r.matching.cluster_of_class; });

  py::class_<PointInfluence>(m, "PointInfluence")
      .def_readonly("id", &PointInfluence::id)
      .def_readonly("assigned", &PointInfluence::assigned)
      .def_readonly("runner_up", &PointInfluence::runner_up)
      .def_readonly("u1", &PointInfluence::u1)
      .def_readonly("u2", &PointInfluence::u2)
      .def_readonly("assigned_loss", &PointInfluence::assigned_loss)
      .def_readonly("margin", &PointInfluence::margin);

  m.def(
      "sym_eigen",
      [](const Matrix& s, const std::string& method) {
        EigenMethod em = EigenMethod::kJacobi;
        if (method == "qr") em = EigenMethod::kTridiagonalQr;
        else if (method == "auto") em = EigenMethod::kAuto;
        else if (method != "jacobi") throw Error(ErrorCode::kInvalidSpec, "method must be jacobi|qr|auto");
        auto d = sym_eigen(s, em);
        return py::make_tuple(d.values, d.vectors);
      },
      py::arg("s"), py::arg("method") = "jacobi", "Eigenvalues (descending) and eigenvectors of a symmetric matrix.");
  m.def(
      "covariance", [](const Matrix& x) { auto mo = covariance(x); return py::make_tuple(mo.mean, mo.cov); },
      py::arg("x"), "Mean and 1/n covariance of the rows of x.");
  m.def(
      "cov_after_delete",
      [](const Vector& mean, const Matrix& cov, std::size_t n, const Matrix& rows) {
        auto mo = cov_after_delete({mean, cov}, n, rows);
        return py::make_tuple(mo.mean, mo.cov);
      },
      py::arg("mean"), py::arg("cov"), py::arg("n"), py::arg("rows"));
  m.def(
      "cov_after_add",
      [](const Vector& mean, const Matrix& cov, std::size_t n, const Matrix& rows) {
        auto mo = cov_after_add({mean, cov}, n, rows);
        return py::make_tuple(mo.mean, mo.cov);
      },
      py::arg("mean"), py::arg("cov"), py::arg("n"), py::arg("rows"));

  m.def(
      "fit_cluster", [](const Matrix& x, int q, bool centered) { return fit_cluster(x, q, centering_of(centered)); },
      py::arg("points"), py::arg("q"), py::arg("centered") = true);
  m.def(
      "run_ksc",
      [](const Matrix& x, int k, int q, const std::vector<int>& init, bool centered) {
        AlternationOptions o;
        o.centering = centering_of(centered);
        return run_ksc(x, k, q, to_clustering(init), o);
      },
      py::arg("points"), py::arg("num_clusters"), py::arg("q"), py::arg("init"), py::arg("centered") = true,
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "best_of_restarts",
      [](const Matrix& x, int k, int q, int restarts, std::uint64_t seed, bool centered) {
        AlternationOptions o;
        o.centering = centering_of(centered);
        return best_of_restarts(x, k, q, restarts, seed, o);
      },
      py::arg("points"), py::arg("num_clusters"), py::arg("q"), py::arg("restarts") = 50, py::arg("seed") = 0,
      py::arg("centered") = true, py::call_guard<py::gil_scoped_release>());

  m.def(
      "score_all",
      [](const Matrix& x, const std::vector<SubspaceModel>& models, const std::vector<int>& assignment,
         const py::dict& labels) {
        const auto store = to_labels(label_pairs(labels), static_cast<int>(models.size()));
        return score_all(x, models, to_clustering(assignment), store).points;
      },
      py::arg("points"), py::arg("models"), py::arg("assignment"), py::arg("labels") = py::dict());
  m.def(
      "select",
      [](const std::string& strategy, const Matrix& x, const std::vector<SubspaceModel>& models,
         const std::vector<int>& assignment, const py::dict& labels, std::size_t batch, std::uint64_t seed) {
        const auto store = to_labels(label_pairs(labels), static_cast<int>(models.size()));
        const auto scores = score_all(x, models, to_clustering(assignment), store);
        std::mt19937_64 rng(seed);
        return select_batch(strategy_of(strategy), scores, batch, rng);
      },
      py::arg("strategy"), py::arg("points"), py::arg("models"), py::arg("assignment"),
      py::arg("labels") = py::dict(), py::arg("batch") = 1, py::arg("seed") = 0,
      "Point ids to query next under a strategy (scal, scal-a, scal-d, maxresid, minmargin, random).");

  m.def(
      "hungarian",
      [](const Matrix& cost) {
        auto a = hungarian(cost);
        return py::make_tuple(a.col_of_row, a.total_cost);
      },
      py::arg("cost"), "Minimum-cost assignment: (column of each row, total cost).");
  m.def(
      "run_kscc",
      [](const Matrix& x, int k, int q, const std::vector<int>& init, const py::dict& labels, bool centered) {
        const auto pairs = label_pairs(labels);
        py::gil_scoped_release release;
        KsccOptions o;
        o.centering = centering_of(centered);
        return run_kscc(x, k, q, to_clustering(init), to_labels(pairs, k), o);
      },
      py::arg("points"), py::arg("num_clusters"), py::arg("q"), py::arg("init"), py::arg("labels"),
      py::arg("centered") = true);
  m.def(
      "satisfies_constraints",
      [](const std::vector<int>& assignment, const py::dict& labels, int k) {
        return satisfies_constraints(assignment, to_labels(label_pairs(labels), k));
      },
      py::arg("assignment"), py::arg("labels"), py::arg("num_classes"));

  m.def(
      "edit_affinity",
      [](const Matrix& w, const py::dict& labels, int k) { return edit_affinity(w, to_labels(label_pairs(labels), k)); },
      py::arg("w"), py::arg("labels"), py::arg("num_classes"));
  m.def(
      "spectral_cluster",
      [](const Matrix& w, int k, std::uint64_t seed) {
        SpectralOptions o;
        o.seed = seed;
        return spectral_cluster(w, k, o).assignment;
      },
      py::arg("w"), py::arg("num_clusters"), py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());

  m.def(
      "generate",
      [](const std::string& kind, double sigma, double theta, std::uint64_t seed) {
        SyntheticSpec spec;
        if (kind == "noise") spec = SyntheticSpec::noise_sweep(sigma, seed);
        else if (kind == "angle") spec = SyntheticSpec::angle_sweep(theta, seed), spec.sigma = sigma;
        else throw Error(ErrorCode::kInvalidSpec, "kind must be noise|angle");
        const Dataset d = generate(spec);
        return py::make_tuple(d.points, *d.true_classes);
      },
      py::arg("kind") = "noise", py::arg("sigma") = 0.2, py::arg("theta") = 30.0, py::arg("seed") = 0,
      "Synthetic union of subspaces: (points, 1-based classes).");

  m.def(
      "nmi",
      [](const std::vector<int>& a, const std::vector<int>& b, const std::string& norm) {
        if (norm != "arithmetic" && norm != "geometric") throw Error(ErrorCode::kInvalidSpec, "bad normalization");
        return nmi(a, b, norm == "geometric" ? NmiNormalization::kGeometric : NmiNormalization::kArithmetic);
      },
      py::arg("a"), py::arg("b"), py::arg("normalization") = "arithmetic");
  m.def(
      "queries_to_perfect",
      [](const std::vector<std::pair<double, double>>& c) {
        std::vector<CurvePoint> pts;
        for (auto [f, v] : c) pts.push_back({f, v});
        return queries_to_perfect(pts);
      },
      py::arg("curve"));
  m.def(
      "auc",
      [](const std::vector<std::pair<double, double>>& c) {
        std::vector<CurvePoint> pts;
        for (auto [f, v] : c) pts.push_back({f, v});
        return auc(pts);
      },
      py::arg("curve"));

  m.def(
      "run_experiment",
      [](const Matrix& x, const std::vector<int>& classes, const std::map<std::string, std::string>& config,
         std::optional<Matrix> affinity) {
        auto kv = config;
        if (affinity && !kv.count("affinity")) kv["affinity"] = "<in-memory>";
        const ExperimentConfig c = parse_config(kv);
        Dataset data;
        data.points = x;
        data.true_classes = classes;
        py::gil_scoped_release release;
        GroundTruthOracle oracle(classes);
        const ExperimentCurve curve =
            run_experiment(c, ExperimentInputs{data, affinity ? &*affinity : nullptr}, oracle);
        py::gil_scoped_acquire acquire;
        py::list records;
        for (const auto& r : curve.records) {
          records.append(py::make_tuple(r.iteration, r.n_queried, r.nmi ? py::cast(*r.nmi) : py::none(), r.objective));
        }
        py::dict out;
        out["records"] = records;
        out["queries"] = curve.labels.query_order();
        out["assignment"] = curve.final_clustering.assignment;
        out["queries_to_perfect_pct"] = curve.queries_to_perfect_pct();
        out["auc_pct"] = curve.auc_pct();
        return out;
      },
      py::arg("points"), py::arg("classes"), py::arg("config"), py::arg("affinity") = py::none(),
      "Benchmark run with a ground-truth oracle.  config uses the key=value names of the config file.");
}
