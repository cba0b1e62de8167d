#include "evalkit/roc.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "common/error.hpp"

namespace hawkeye {

namespace {

// Fraction of `sorted` strictly above t.
double fraction_above(const std::vector<double>& sorted, double t) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

void check_scores(std::span<const double> clean, std::span<const double> adv) {
  require(!clean.empty() && !adv.empty(), ErrorCode::invalid_argument,
          "ROC needs both clean and adversarial scores");
  for (auto set : {clean, adv}) {
    for (double v : set) {
      require(std::isfinite(v), ErrorCode::invalid_argument, "ROC score is not finite");
    }
  }
}

}  // namespace

std::vector<double> linear_thresholds(int count) {
  require(count >= 2, ErrorCode::invalid_argument, "need at least two thresholds");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = static_cast<double>(i) / (count - 1);
  return out;
}

std::vector<double> quantile_thresholds(std::span<const double> clean_scores,
                                        std::span<const double> adv_scores, int count) {
  check_scores(clean_scores, adv_scores);
  require(count >= 2, ErrorCode::invalid_argument, "need at least two thresholds");
  std::vector<double> pooled(clean_scores.begin(), clean_scores.end());
  pooled.insert(pooled.end(), adv_scores.begin(), adv_scores.end());
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> out(static_cast<std::size_t>(count));
  const double last = static_cast<double>(pooled.size() - 1);
  for (int i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(std::llround(last * i / (count - 1)));
    out[i] = pooled[idx];
  }
  return out;
}

RocCurve roc_curve(std::span<const double> clean_scores, std::span<const double> adv_scores,
                   std::span<const double> thresholds) {
  check_scores(clean_scores, adv_scores);
  require(!thresholds.empty(), ErrorCode::invalid_argument, "no thresholds to sweep");
  std::vector<double> clean(clean_scores.begin(), clean_scores.end());
  std::vector<double> adv(adv_scores.begin(), adv_scores.end());
  std::sort(clean.begin(), clean.end());
  std::sort(adv.begin(), adv.end());
  std::vector<double> ts(thresholds.begin(), thresholds.end());
  std::sort(ts.begin(), ts.end());
  RocCurve curve;
  for (double t : ts) curve.points.push_back({t, fraction_above(clean, t), fraction_above(adv, t)});
  curve.auc = roc_auc(curve.points);
  return curve;
}

double roc_auc(std::span<const RocPoint> points) {
  std::vector<std::pair<double, double>> xy{{0.0, 0.0}, {1.0, 1.0}};
  for (const RocPoint& p : points) xy.emplace_back(p.fpr, p.dr);
  std::sort(xy.begin(), xy.end());
  double area = 0.0;
  for (std::size_t i = 1; i < xy.size(); ++i) {
    area += (xy[i].first - xy[i - 1].first) * (xy[i].second + xy[i - 1].second) / 2.0;
  }
  return area;
}

}  // namespace hawkeye
