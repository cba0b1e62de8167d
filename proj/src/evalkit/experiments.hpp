#pragma once

#include <span>
#include <string>
#include <vector>

#include "attacks/attacks.hpp"
#include "evalkit/report.hpp"

namespace hawkeye {

// FGSM examples of `data` at every multiplier in `ms`, crafted on `model`.
// The clean-image gradient sign is computed once and shared by all levels.
std::vector<nd::Tensor> fgsm_levels(const Classifier& model, const LabeledDataset& data,
                                    std::span<const int> ms);

struct GridSpec {
  AttackMethod method = AttackMethod::fgsm;
  std::vector<int> ms{2, 4, 8, 16, 32};
  std::string attack = "whitebox";
  DrDenominator dr_over = DrDenominator::successful;
};

// One row per (m, detector): attacks `data` on `crafting`, classifies and
// detects on `target`. False positives are counted on the clean images.
std::vector<MetricsRow> evaluate_grid(const Classifier& target, const Classifier& crafting,
                                      const LabeledDataset& data,
                                      std::span<const EvalDetector> detectors,
                                      const GridSpec& spec);

// Row of `rows` for (m, detector id), if present.
const MetricsRow* find_row(std::span<const MetricsRow> rows, int m, const std::string& detector_id);

}  // namespace hawkeye
