#pragma once

#include <span>
#include <vector>

namespace hawkeye {

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double dr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending threshold
  double auc = 0.0;
};

// `count` evenly spaced thresholds from 0 to 1 inclusive.
std::vector<double> linear_thresholds(int count = 201);
// `count` quantiles (0 to 1 inclusive) of the pooled scores.
std::vector<double> quantile_thresholds(std::span<const double> clean_scores,
                                        std::span<const double> adv_scores, int count = 201);

// Flag iff score > T at each threshold. AUC by the trapezoid rule over FPR
// with the curve padded by (0,0) and (1,1).
RocCurve roc_curve(std::span<const double> clean_scores, std::span<const double> adv_scores,
                   std::span<const double> thresholds);

double roc_auc(std::span<const RocPoint> points);

}  // namespace hawkeye
