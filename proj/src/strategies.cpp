#include "subal/strategies.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "subal/error.hpp"

namespace subal {
namespace {

constexpr std::array<std::pair<Strategy, std::string_view>, 6> kNames{{
    {Strategy::kScal, "scal"},
    {Strategy::kScalA, "scal-a"},
    {Strategy::kScalD, "scal-d"},
    {Strategy::kMaxResid, "maxresid"},
    {Strategy::kMinMargin, "minmargin"},
    {Strategy::kRandom, "random"},
}};

// Larger is better for every strategy after this mapping.
double criterion(Strategy s, const PointInfluence& p) {
  switch (s) {
    case Strategy::kScal: return p.u1 - p.u2;
    case Strategy::kScalA: return -p.u2;
    case Strategy::kScalD: return p.u1;
    case Strategy::kMaxResid: return p.assigned_loss;
    case Strategy::kMinMargin: return -p.margin;
    case Strategy::kRandom: break;
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto& [value, name] : kNames) {
    if (value == s) return name;
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (const auto& [value, n] : kNames) {
    if (n == name) return value;
  }
  return std::nullopt;
}

std::vector<PointId> select_batch(Strategy strategy, const InfluenceScores& scores, std::size_t batch,
                                  std::mt19937_64& rng) {
  const auto& pts = scores.points;
  if (pts.empty()) throw Error(ErrorCode::kNoUnlabelled, "no unlabelled candidates");
  batch = std::min(batch, pts.size());

  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  if (strategy == Strategy::kRandom) {
    // Partial Fisher-Yates: the first `batch` slots are a uniform sample.
    for (std::size_t i = 0; i < batch; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(rng)]);
    }
  } else {
    std::vector<double> value(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) value[i] = criterion(strategy, pts[i]);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(batch), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (value[a] != value[b]) return value[a] > value[b];
                        return pts[a].id < pts[b].id;
                      });
  }

  std::vector<PointId> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(pts[order[i]].id);
  return out;
}

PointId select(Strategy strategy, const InfluenceScores& scores, std::mt19937_64& rng) {
  return select_batch(strategy, scores, 1, rng).front();
}

}  // namespace subal
