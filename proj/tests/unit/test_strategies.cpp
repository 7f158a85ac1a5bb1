#include <doctest.h>

#include <set>

#include "subal/error.hpp"
#include "subal/strategies.hpp"

using namespace subal;

namespace {

InfluenceScores fixture() {
  InfluenceScores s;
  //            id assigned runner u1    u2    loss  margin
  s.points.push_back({0, 0, 1, 0.5, 0.1, 2.0, 0.9});
  s.points.push_back({2, 0, 1, 0.9, 0.6, 1.0, 0.05});
  s.points.push_back({3, 1, 0, 0.1, -0.3, 3.0, 0.4});
  s.points.push_back({7, 1, 0, 0.2, 0.2, 0.5, 0.05});
  return s;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
  for (Strategy s : {Strategy::kScal, Strategy::kScalA, Strategy::kScalD, Strategy::kMaxResid, Strategy::kMinMargin,
                     Strategy::kRandom}) {
    CHECK(parse_strategy(to_string(s)) == s);
  }
  CHECK(to_string(Strategy::kScalA) == "scal-a");
  CHECK_FALSE(parse_strategy("SCAL").has_value());
}

TEST_CASE("each strategy optimizes its criterion") {
  const auto s = fixture();
  std::mt19937_64 rng(0);
  CHECK(select(Strategy::kScal, s, rng) == 0);      // u1-u2: 0.4, 0.3, 0.4, 0.0 -> tie, lowest id
  CHECK(select(Strategy::kScalA, s, rng) == 3);     // min u2
  CHECK(select(Strategy::kScalD, s, rng) == 2);     // max u1
  CHECK(select(Strategy::kMaxResid, s, rng) == 3);  // max loss
  CHECK(select(Strategy::kMinMargin, s, rng) == 2);  // margin tie 0.05 -> id 2
}

TEST_CASE("batches come best first") {
  const auto s = fixture();
  std::mt19937_64 rng(0);
  CHECK(select_batch(Strategy::kScal, s, 3, rng) == std::vector<PointId>{0, 3, 2});
  CHECK(select_batch(Strategy::kMaxResid, s, 10, rng).size() == 4);
}

TEST_CASE("sentinel scores sort last") {
  InfluenceScores s;
  s.points.push_back({0, 0, 1, kNoDeletionScore, 0.0, 1.0, 1.0});
  s.points.push_back({1, 0, 1, 0.0, kNoAdditionScore, 1.0, 1.0});
  s.points.push_back({2, 0, 1, -5.0, 5.0, 1.0, 1.0});
  std::mt19937_64 rng(0);
  CHECK(select(Strategy::kScal, s, rng) == 2);
}

TEST_CASE("random selection is uniform and seeded") {
  InfluenceScores s;
  for (PointId i = 0; i < 5; ++i) s.points.push_back({i, 0, 1, 0, 0, 0, 0});
  std::mt19937_64 a(123), b(123);
  CHECK(select_batch(Strategy::kRandom, s, 3, a) == select_batch(Strategy::kRandom, s, 3, b));

  std::mt19937_64 rng(7);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 5000; ++i) ++counts[select(Strategy::kRandom, s, rng)];
  for (int c : counts) CHECK(std::abs(c - 1000) < 150);

  const auto batch = select_batch(Strategy::kRandom, s, 5, rng);
  CHECK(std::set<PointId>(batch.begin(), batch.end()).size() == 5);
}

TEST_CASE("empty candidates") {
  std::mt19937_64 rng(0);
  CHECK_THROWS_AS(select(Strategy::kScal, InfluenceScores{}, rng), Error);
}
