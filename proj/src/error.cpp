#include "subal/error.hpp"

namespace subal {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kDegenerateCluster: return "DegenerateCluster";
    case ErrorCode::kClusteringCollapsed: return "ClusteringCollapsed";
    case ErrorCode::kNoUnlabelled: return "NoUnlabelled";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kOracleError: return "OracleError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace subal
