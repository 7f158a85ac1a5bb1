#include "subal/metrics.hpp"

#include <cmath>
#include <map>

#include "subal/error.hpp"

namespace subal {
namespace {

double entropy(const std::map<int, double>& counts, double n) {
  double h = 0.0;
  for (const auto& [label, c] : counts) {
    const double p = c / n;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

double nmi(std::span<const int> a, std::span<const int> b, NmiNormalization normalization) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidInput, "nmi: partitions differ in length");
  if (a.empty()) throw Error(ErrorCode::kInvalidInput, "nmi: empty partitions");

  const double n = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  const double ha = entropy(ca, n);
  const double hb = entropy(cb, n);

  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    mi += (c / n) * std::log(c * n / (ca[key.first] * cb[key.second]));
  }
  mi = std::max(mi, 0.0);

  if (normalization == NmiNormalization::kGeometric) {
    if (ha == 0.0 && hb == 0.0) return 1.0;
    if (ha == 0.0 || hb == 0.0) return 0.0;
    return std::min(1.0, mi / std::sqrt(ha * hb));
  }
  if (ha + hb == 0.0) return 1.0;
  return std::min(1.0, 2.0 * mi / (ha + hb));
}

double queries_to_perfect(std::span<const CurvePoint> curve) {
  for (const auto& p : curve) {
    if (is_perfect(p.nmi)) return 100.0 * p.fraction_queried;
  }
  return 100.0;
}

double auc(std::span<const CurvePoint> curve) {
  if (curve.empty()) return 0.0;
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double dx = curve[i].fraction_queried - curve[i - 1].fraction_queried;
    area += 0.5 * dx * (curve[i].nmi + curve[i - 1].nmi);
  }
  const auto& last = curve.back();
  if (last.fraction_queried < 1.0) area += (1.0 - last.fraction_queried) * last.nmi;
  return 100.0 * area;
}

}  // namespace subal
