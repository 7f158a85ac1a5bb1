#include <doctest.h>

#include "../support.hpp"
#include "subal/datagen.hpp"
#include "subal/error.hpp"
#include "subal/influence.hpp"
#include "subal/ksc.hpp"

using namespace subal;
using namespace subal::testing;

namespace {

Matrix without_row(const Matrix& x, Eigen::Index r) {
  Matrix out(x.rows() - 1, x.cols());
  out << x.topRows(r), x.bottomRows(x.rows() - r - 1);
  return out;
}

Matrix with_row(const Matrix& x, const Vector& v) {
  Matrix out(x.rows() + 1, x.cols());
  out << x, v.transpose();
  return out;
}

Matrix cluster_points(std::uint64_t seed, int n = 120) {
  std::mt19937_64 rng(seed);
  const Matrix frame = random_frame(8, 3, rng);
  const Matrix coords = gaussian_matrix(n, 3, rng);
  return coords * frame.transpose() + gaussian_matrix(n, 8, rng, 0.2);
}

}  // namespace

TEST_CASE("exact oracles equal refitting from scratch") {
  const Matrix x = cluster_points(1, 40);
  const Vector p = x.row(7).transpose();
  const double before = trailing_eigen_sum(loop_covariance(x).second, 3);
  const double after_del = trailing_eigen_sum(loop_covariance(without_row(x, 7)).second, 3);
  CHECK(exact_deletion_oracle(p, x, 3) == doctest::Approx(before - after_del).epsilon(1e-9));
  CHECK(exact_deletion_oracle(p, x, 3, Centering::kOn, OracleScale::kScatter) ==
        doctest::Approx(40 * before - 39 * after_del).epsilon(1e-9));

  const Vector outside = Vector::Constant(8, 0.7);
  const double after_add = trailing_eigen_sum(loop_covariance(with_row(x, outside)).second, 3);
  CHECK(exact_addition_oracle(outside, x, 3) == doctest::Approx(after_add - before).epsilon(1e-9));
  CHECK(exact_addition_oracle(outside, x, 3, Centering::kOn, OracleScale::kScatter) ==
        doctest::Approx(41 * after_add - 40 * before).epsilon(1e-9));
}

TEST_CASE("adding the cluster mean leaves the summed loss unchanged") {
  const Matrix x = cluster_points(2, 50);
  const Vector mean = loop_covariance(x).first;
  CHECK(std::abs(exact_addition_oracle(mean, x, 3, Centering::kOn, OracleScale::kScatter)) < 1e-10);
  // The first-order score agrees: alpha = 0 so u2 = -trailing/(n+1) on the
  // eigenvalue scale, matching the exact eigenvalue-scale change.
  const auto m = fit_cluster(x, 3);
  CHECK(addition_influence(mean, m) == doctest::Approx(exact_addition_oracle(mean, x, 3)).epsilon(1e-9));
}

TEST_CASE("first-order scores track the exact change") {
  const Matrix x = cluster_points(3, 200);
  const auto m = fit_cluster(x, 3);
  // Floor for points whose exact change is close to zero.
  const double floor = 0.1 * m.trailing_sum() / 200.0;
  std::vector<double> rel;
  for (Eigen::Index i = 0; i < 40; ++i) {
    const Vector p = x.row(i).transpose();
    const double exact = exact_deletion_oracle(p, x, 3);
    const double err = std::abs(deletion_influence(p, m) - exact);
    CHECK(err <= 0.1 * std::abs(exact) + floor);
    rel.push_back(err / std::abs(exact));
  }
  std::mt19937_64 rng(9);
  for (int i = 0; i < 40; ++i) {
    const Vector p = gaussian_matrix(8, 1, rng);
    const double exact = exact_addition_oracle(p, x, 3);
    const double err = std::abs(addition_influence(p, m) - exact);
    CHECK(err <= 0.1 * std::abs(exact) + floor);
    rel.push_back(err / std::abs(exact));
  }
  std::nth_element(rel.begin(), rel.begin() + 40, rel.end());
  CHECK(rel[40] < 0.1);
}

TEST_CASE("block deletion of one row equals single deletion") {
  const Matrix x = cluster_points(4, 60);
  const auto m = fit_cluster(x, 3);
  CHECK(block_deletion_influence(x.topRows(1), m) == doctest::Approx(deletion_influence(x.row(0).transpose(), m)));
  const double block = block_deletion_influence(x.topRows(3), m);
  CHECK(std::isfinite(block));
}

TEST_CASE("uncentered influence matches its exact oracle") {
  const Matrix x = cluster_points(5, 150);
  const auto m = fit_cluster(x, 3, Centering::kOff);
  const Vector p = x.row(2).transpose();
  const double exact = exact_deletion_oracle(p, x, 3, Centering::kOff);
  CHECK(std::abs(deletion_influence(p, m) - exact) <= 0.1 * std::abs(exact) + 0.1 * m.trailing_sum() / 150.0);
}

TEST_CASE("small clusters are rejected") {
  const Matrix x = cluster_points(6, 5);
  const auto m = fit_cluster(x, 3);
  CHECK_THROWS_AS(deletion_influence(x.row(0).transpose(), m), Error);
  CHECK_NOTHROW(addition_influence(x.row(0).transpose(), m));
  CHECK_THROWS_AS(addition_influence(x.row(0).transpose(), fit_cluster(x.topRows(4), 3)), Error);
}

TEST_CASE("score_all covers unlabelled points with a distinct runner-up") {
  SyntheticSpec s = SyntheticSpec::noise_sweep(0.2, 3);
  s.points_per_cluster = 40;
  s.num_clusters = 3;
  const Dataset d = generate(s);
  const KscResult r = best_of_restarts(d.points, 3, 10, 3, 0);
  LabelStore labels(3);
  labels.add(4, (*d.true_classes)[4]);
  labels.add(50, (*d.true_classes)[50]);
  const InfluenceScores sc = score_all(d.points, r.models, r.clustering, labels);
  REQUIRE(sc.points.size() == d.size() - 2);
  PointId prev = 0;
  bool first = true;
  for (const auto& p : sc.points) {
    CHECK_FALSE(labels.contains(p.id));
    if (!first) CHECK(p.id > prev);
    first = false;
    prev = p.id;
    CHECK(p.assigned == r.clustering.assignment[p.id]);
    CHECK(p.runner_up != p.assigned);
    const Vector x = d.points.row(static_cast<Eigen::Index>(p.id)).transpose();
    CHECK(p.assigned_loss == doctest::Approx(reconstruction_loss(x, r.models[static_cast<std::size_t>(p.assigned)])));
    for (int k = 0; k < 3; ++k) {
      if (k == p.assigned) continue;
      CHECK(reconstruction_loss(x, r.models[static_cast<std::size_t>(k)]) >= p.assigned_loss + p.margin - 1e-12);
    }
  }
}

TEST_CASE("first-order scores in summed-loss units are the point's own residuals") {
  // n*sum(lambda) - (n-1)*(sum(lambda) - u1) collapses to sum(alpha^2), and
  // likewise for addition, so the size-weighted difference is minus the margin.
  SyntheticSpec s = SyntheticSpec::noise_sweep(0.2, 8);
  s.points_per_cluster = 60;
  s.num_clusters = 3;
  const Dataset d = generate(s);
  const KscResult r = best_of_restarts(d.points, 3, 10, 3, 0);
  const InfluenceScores sc = score_all(d.points, r.models, r.clustering, LabelStore(3));
  for (const auto& p : sc.points) {
    const auto& own = r.models[static_cast<std::size_t>(p.assigned)];
    const auto& other = r.models[static_cast<std::size_t>(p.runner_up)];
    const double d1 = own.trailing_sum() + (static_cast<double>(own.size) - 1.0) * p.u1;
    const double d2 = other.trailing_sum() + (static_cast<double>(other.size) + 1.0) * p.u2;
    CHECK(d1 == doctest::Approx(p.assigned_loss).epsilon(1e-9));
    CHECK(d2 == doctest::Approx(p.assigned_loss + p.margin).epsilon(1e-9));
  }
}

TEST_CASE("score_all with everything labelled") {
  Matrix x(4, 2);
  x << 0, 1, 0, 2, 1, 0, 2, 0;
  const std::vector<int> a{0, 0, 1, 1};
  const auto models = fit_models(x, a, 2, 1, Centering::kOn);
  Clustering c;
  c.assignment = a;
  LabelStore labels(2);
  for (PointId i = 0; i < 4; ++i) labels.add(i, a[i] + 1);
  try {
    score_all(x, models, c, labels);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoUnlabelled);
  }
}
