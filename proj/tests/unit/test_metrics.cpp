#include <doctest.h>

#include "../support.hpp"
#include "subal/error.hpp"
#include "subal/metrics.hpp"

using namespace subal;
using namespace subal::testing;

TEST_CASE("nmi fixtures") {
  const std::vector<int> a{0, 0, 1, 1};
  CHECK(nmi(a, a) == doctest::Approx(1.0));
  CHECK(nmi(a, std::vector<int>{0, 1, 0, 1}) == doctest::Approx(0.0));
  // H(a) = ln 2, H(b) = -(3/4 ln 3/4 + 1/4 ln 1/4), I = H(b) - H(b|a) = H(b) - ln2/2.
  const double hb = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  const double expected = 2.0 * (hb - 0.5 * std::log(2.0)) / (std::log(2.0) + hb);
  const double got = nmi(a, std::vector<int>{0, 0, 0, 1});
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(got - 0.344) < 1e-3);
}

TEST_CASE("nmi is symmetric and label-name invariant") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> u(0, 3);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<int> a(30), b(30);
    for (int i = 0; i < 30; ++i) a[static_cast<std::size_t>(i)] = u(rng), b[static_cast<std::size_t>(i)] = u(rng);
    std::vector<int> renamed = a;
    for (int& v : renamed) v = 10 - 3 * v;
    const double v = nmi(a, b);
    CHECK(v == doctest::Approx(nmi(b, a)).epsilon(1e-14));
    CHECK(v == doctest::Approx(nmi(renamed, b)).epsilon(1e-14));
    CHECK(v == doctest::Approx(reference_nmi(a, b)).epsilon(1e-12));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-12);
    CHECK(nmi(a, b, NmiNormalization::kGeometric) >= v - 1e-12);  // geometric mean <= arithmetic mean
  }
}

TEST_CASE("nmi edge cases") {
  const std::vector<int> one{3, 3, 3};
  CHECK(nmi(one, one) == 1.0);
  CHECK(nmi(one, std::vector<int>{1, 2, 3}) == 0.0);
  CHECK(nmi(one, one, NmiNormalization::kGeometric) == 1.0);
  CHECK_THROWS_AS(nmi(one, std::vector<int>{1, 2}), Error);
  CHECK_THROWS_AS(nmi(std::vector<int>{}, std::vector<int>{}), Error);
}

TEST_CASE("curve summaries") {
  const std::vector<CurvePoint> perfect{{0.0, 1.0}};
  CHECK(queries_to_perfect(perfect) == 0.0);
  CHECK(auc(perfect) == 100.0);

  const std::vector<CurvePoint> zero{{0.0, 0.0}, {0.3, 0.0}};
  CHECK(queries_to_perfect(zero) == 100.0);
  CHECK(auc(zero) == 0.0);

  const std::vector<CurvePoint> piecewise{{0.0, 0.5}, {0.5, 1.0}, {1.0, 1.0}};
  CHECK(auc(piecewise) == 87.5);
  CHECK(queries_to_perfect(piecewise) == 50.0);

  // Flat extension after the last record.
  const std::vector<CurvePoint> stops{{0.0, 0.5}, {0.5, 1.0}};
  CHECK(auc(stops) == 87.5);

  const std::vector<CurvePoint> almost{{0.0, 0.2}, {0.25, 1.0 - 1e-13}};
  CHECK(queries_to_perfect(almost) == 25.0);
}

TEST_CASE("auc is monotone under pointwise domination") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<CurvePoint> lo, hi;
    for (int i = 0; i <= 10; ++i) {
      const double v = u(rng);
      lo.push_back({i / 10.0, v});
      hi.push_back({i / 10.0, std::min(1.0, v + 0.2 * u(rng))});
    }
    CHECK(auc(hi) >= auc(lo));
  }
}
