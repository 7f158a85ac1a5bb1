#pragma once

#include <span>
#include <vector>

namespace subal {

enum class NmiNormalization { kArithmetic, kGeometric };

// Normalized mutual information between two partitions given as label
// vectors (any integer labels).  Natural-log entropies; 2 I / (H(a) + H(b))
// by default.  Two single-block partitions score 1.  Throws kInvalidInput
// on length mismatch or empty input.
double nmi(std::span<const int> a, std::span<const int> b,
           NmiNormalization normalization = NmiNormalization::kArithmetic);

inline constexpr double kPerfectNmiTolerance = 1e-12;

inline bool is_perfect(double nmi_value) { return nmi_value >= 1.0 - kPerfectNmiTolerance; }

struct CurvePoint {
  double fraction_queried = 0.0;  // in [0, 1]
  double nmi = 0.0;
};

// 100 * first fraction queried with NMI = 1, or 100 when never reached.
double queries_to_perfect(std::span<const CurvePoint> curve);

// 100 * trapezoidal area under NMI over fraction queried in [0, 1]; the
// curve stays flat after its last point.
double auc(std::span<const CurvePoint> curve);

}  // namespace subal
