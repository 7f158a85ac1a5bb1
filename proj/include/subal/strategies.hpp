#pragma once

// Query selection over influence scores.

#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "subal/influence.hpp"

namespace subal {

enum class Strategy {
  kScal,       // argmax (u1 - u2)
  kScalA,      // argmin u2
  kScalD,      // argmax u1
  kMaxResid,   // argmax assigned loss
  kMinMargin,  // argmin (runner-up loss - assigned loss)
  kRandom,     // uniform over unlabelled points
};

std::string_view to_string(Strategy s);
// Accepts the CLI names scal, scal-a, scal-d, maxresid, minmargin, random.
std::optional<Strategy> parse_strategy(std::string_view name);

// Single query.  Ties go to the lowest point id.  Throws kNoUnlabelled on
// empty scores.
PointId select(Strategy strategy, const InfluenceScores& scores, std::mt19937_64& rng);

// Top-`batch` queries by the strategy's criterion (fewer if not enough
// candidates), best first.
std::vector<PointId> select_batch(Strategy strategy, const InfluenceScores& scores, std::size_t batch,
                                  std::mt19937_64& rng);

}  // namespace subal
