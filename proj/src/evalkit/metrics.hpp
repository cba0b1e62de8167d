#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detector/aed.hpp"
#include "evalkit/logit_cache.hpp"

namespace hawkeye {

// Which perturbed images DR is measured over.
enum class DrDenominator {
  successful,  // perturbed images the classifier gets wrong (default)
  all,         // every perturbed image
};

struct Metrics {
  std::optional<double> dr;  // absent when its denominator is zero
  double fpr = 0.0;
  double asr = 0.0;
  double asr_ad = 0.0;
  std::size_t n_clean = 0;
  std::size_t n_clean_flagged = 0;
  std::size_t n_adv = 0;        // attempted perturbations
  std::size_t n_success = 0;    // misclassified perturbed images
  std::size_t n_dr_denominator = 0;
  std::size_t n_dr_flagged = 0;
  std::size_t n_evaded = 0;     // misclassified and not flagged
  DrDenominator dr_over = DrDenominator::successful;
};

// Fraction of perturbed images whose prediction differs from the label.
double attack_success_rate(std::span<const int> labels, std::span<const int> predictions);

Metrics compute_metrics(std::span<const int> labels, std::span<const int> adv_predictions,
                        std::span<const std::uint8_t> clean_flags,
                        std::span<const std::uint8_t> adv_flags,
                        DrDenominator dr_over = DrDenominator::successful);

// A detector under evaluation: one AED, a unanimous cascade of AEDs, or the
// feature-squeezing baseline thresholded at tau.
class EvalDetector {
 public:
  enum class Kind { single, cascade, squeeze };

  static EvalDetector single(Aed aed);
  static EvalDetector cascade(CascadeDetector cascade);
  static EvalDetector squeeze(int step, double tau);

  Kind kind() const noexcept { return kind_; }
  std::vector<int> steps() const;
  // "aed-s64", "cascade-s64-s128", "fs-s64".
  std::string id() const;
  // "64" or "64+128", for the CSV step column.
  std::string step_label() const;
  double threshold() const;
  void set_squeeze_threshold(double tau);

  Verdicts run(const LogitCache& cache) const;

 private:
  Kind kind_ = Kind::single;
  std::vector<Aed> aeds_;
  int fs_step_ = 0;
  double tau_ = 0.0;
};

// Smallest tau such that at most floor(target_fpr * n) clean scores exceed it.
double calibrate_threshold(std::span<const double> clean_scores, double target_fpr);

Metrics evaluate_detector(const EvalDetector& detector, const LogitCache& clean,
                          const LogitCache& adversarial, std::span<const int> adv_labels,
                          DrDenominator dr_over = DrDenominator::successful);

}  // namespace hawkeye
