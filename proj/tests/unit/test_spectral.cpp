#include <doctest.h>

#include <fstream>

#include "../support.hpp"
#include "subal/datagen.hpp"
#include "subal/error.hpp"
#include "subal/metrics.hpp"
#include "subal/spectral.hpp"

using namespace subal;
using namespace subal::testing;

namespace {

// Block affinity: within-block weight `in`, across-block `out` plus noise.
Matrix block_affinity(const std::vector<int>& blocks, double in, double out, std::mt19937_64& rng, double noise) {
  const auto n = static_cast<Eigen::Index>(blocks.size());
  std::uniform_real_distribution<double> u(0.0, noise);
  Matrix w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = (blocks[static_cast<std::size_t>(i)] == blocks[static_cast<std::size_t>(j)] ? in : out) + u(rng);
      w(i, j) = w(j, i) = v;
    }
  }
  return w;
}

}  // namespace

TEST_CASE("edit_affinity writes labelled pairs only") {
  std::mt19937_64 rng(1);
  const Matrix w = block_affinity({1, 1, 2, 2, 3}, 0.5, 0.2, rng, 0.1);
  LabelStore labels(3);
  labels.add(0, 1);
  labels.add(2, 1);
  labels.add(4, 3);
  const Matrix e = edit_affinity(w, labels);
  CHECK(e(0, 2) == 1.0);
  CHECK(e(2, 0) == 1.0);
  CHECK(e(0, 4) == 0.0);
  CHECK(e(4, 2) == 0.0);
  CHECK(e(0, 0) == w(0, 0));
  CHECK(e(1, 3) == w(1, 3));
  CHECK((e - e.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("edit_affinity validates its input") {
  LabelStore labels(2);
  Matrix asym = Matrix::Ones(3, 3);
  asym(0, 1) = 2.0;
  CHECK_THROWS_AS(edit_affinity(asym, labels), Error);
  CHECK_THROWS_AS(edit_affinity(Matrix::Ones(2, 3), labels), Error);
  CHECK_THROWS_AS(edit_affinity(-Matrix::Ones(3, 3), labels), Error);
}

TEST_CASE("normalized laplacian of two disconnected blocks") {
  Matrix w = Matrix::Zero(4, 4);
  w(0, 1) = w(1, 0) = 1.0;
  w(2, 3) = w(3, 2) = 2.0;
  const Matrix l = normalized_laplacian(w);
  Eigen::SelfAdjointEigenSolver<Matrix> es(l);
  CHECK(es.eigenvalues()[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(es.eigenvalues()[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(es.eigenvalues()[2] == doctest::Approx(2.0));
  CHECK(l(0, 1) == doctest::Approx(-1.0));
  CHECK(l(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("spectral clustering separates clean blocks") {
  std::mt19937_64 rng(3);
  std::vector<int> blocks;
  for (int b = 1; b <= 3; ++b)
    for (int i = 0; i < 15; ++i) blocks.push_back(b);
  const Matrix w = block_affinity(blocks, 1.0, 0.0, rng, 0.05);
  const Clustering c = spectral_cluster(w, 3);
  CHECK(nmi(c.assignment, blocks) == doctest::Approx(1.0));
  // Seeded: identical output on repeat.
  CHECK(spectral_cluster(w, 3).assignment == c.assignment);
}

TEST_CASE("spectral step satisfies every constraint") {
  SyntheticSpec s = SyntheticSpec::noise_sweep(0.1, 2);
  s.num_clusters = 3;
  s.points_per_cluster = 20;
  s.q = 3;
  s.dim = 8;
  const Dataset d = generate(s);
  std::mt19937_64 rng(4);
  const Matrix w = block_affinity(*d.true_classes, 0.3, 0.25, rng, 0.3);
  LabelStore labels(3);
  for (std::size_t i = 0; i < d.size(); i += 6) labels.add(i, (*d.true_classes)[i]);
  const auto step = spectral_active_step(d.points, w, labels, 3, 3);
  CHECK(constraints_hold(step.refined.clustering.assignment, labels));
  CHECK(step.spectral.size() == d.size());
}

TEST_CASE("load_affinity reads a CSV matrix") {
  TempDir dir("aff");
  const auto path = dir.path() / "w.csv";
  std::ofstream(path) << "1,0.5\n0.5,1\n";
  const Matrix w = load_affinity(path.string());
  CHECK(w.rows() == 2);
  CHECK(w(0, 1) == 0.5);
  std::ofstream(path) << "1,0.5\n0.4,1\n";
  CHECK_THROWS_AS(load_affinity(path.string()), Error);
}
