#include "evalkit/metrics.hpp"

#include <algorithm>
#include <functional>
#include <string>

#include <fmt/format.h>

#include "common/error.hpp"
#include "detector/quantize.hpp"

namespace hawkeye {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double attack_success_rate(std::span<const int> labels, std::span<const int> predictions) {
  require(labels.size() == predictions.size() && !labels.empty(), ErrorCode::count_mismatch,
          "labels and predictions must be non-empty and of equal length");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) wrong += labels[i] != predictions[i];
  return ratio(wrong, labels.size());
}

Metrics compute_metrics(std::span<const int> labels, std::span<const int> adv_predictions,
                        std::span<const std::uint8_t> clean_flags,
                        std::span<const std::uint8_t> adv_flags, DrDenominator dr_over) {
  require(!clean_flags.empty(), ErrorCode::invalid_argument, "no clean images to score");
  require(!labels.empty(), ErrorCode::invalid_argument, "no perturbed images to score");
  require(labels.size() == adv_predictions.size() && labels.size() == adv_flags.size(),
          ErrorCode::count_mismatch,
          fmt::format("{} labels, {} predictions and {} verdicts for the perturbed set",
                      labels.size(), adv_predictions.size(), adv_flags.size()));
  Metrics m;
  m.dr_over = dr_over;
  m.n_clean = clean_flags.size();
  m.n_clean_flagged = static_cast<std::size_t>(
      std::count_if(clean_flags.begin(), clean_flags.end(), [](auto f) { return f != 0; }));
  m.n_adv = labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool success = adv_predictions[i] != labels[i];
    const bool flagged = adv_flags[i] != 0;
    m.n_success += success;
    m.n_evaded += success && !flagged;
    if (success || dr_over == DrDenominator::all) {
      ++m.n_dr_denominator;
      m.n_dr_flagged += flagged;
    }
  }
  m.fpr = ratio(m.n_clean_flagged, m.n_clean);
  m.asr = ratio(m.n_success, m.n_adv);
  m.asr_ad = ratio(m.n_evaded, m.n_adv);
  if (m.n_dr_denominator > 0) m.dr = ratio(m.n_dr_flagged, m.n_dr_denominator);
  return m;
}

EvalDetector EvalDetector::single(Aed aed) {
  EvalDetector d;
  d.kind_ = Kind::single;
  d.aeds_.push_back(std::move(aed));
  return d;
}

EvalDetector EvalDetector::cascade(CascadeDetector cascade) {
  EvalDetector d;
  d.kind_ = Kind::cascade;
  d.aeds_.assign(cascade.members().begin(), cascade.members().end());
  return d;
}

EvalDetector EvalDetector::squeeze(int step, double tau) {
  check_step(step);
  EvalDetector d;
  d.kind_ = Kind::squeeze;
  d.fs_step_ = step;
  d.set_squeeze_threshold(tau);
  return d;
}

void EvalDetector::set_squeeze_threshold(double tau) {
  require(kind_ == Kind::squeeze, ErrorCode::bad_state, "not a feature-squeezing detector");
  require(tau >= 0.0 && tau <= 2.0, ErrorCode::out_of_range,
          fmt::format("squeezing threshold {} outside [0, 2]", tau));
  tau_ = tau;
}

std::vector<int> EvalDetector::steps() const {
  if (kind_ == Kind::squeeze) return {fs_step_};
  std::vector<int> out;
  for (const Aed& a : aeds_) out.push_back(a.step());
  return out;
}

std::string EvalDetector::id() const {
  switch (kind_) {
    case Kind::single: return fmt::format("aed-s{}", aeds_.front().step());
    case Kind::squeeze: return fmt::format("fs-s{}", fs_step_);
    case Kind::cascade: break;
  }
  std::string out = "cascade";
  for (int s : steps()) out += fmt::format("-s{}", s);
  return out;
}

std::string EvalDetector::step_label() const {
  std::string out;
  for (int s : steps()) out += (out.empty() ? "" : "+") + std::to_string(s);
  return out;
}

double EvalDetector::threshold() const {
  if (kind_ == Kind::squeeze) return tau_;
  return aeds_.front().threshold();
}

Verdicts EvalDetector::run(const LogitCache& cache) const {
  if (kind_ == Kind::squeeze) {
    Verdicts v;
    v.scores = cache.squeeze_scores(fs_step_);
    v.flagged.resize(v.scores.size());
    for (std::size_t i = 0; i < v.scores.size(); ++i) v.flagged[i] = v.scores[i] > tau_;
    return v;
  }
  if (kind_ == Kind::single) return aeds_.front().detect(cache.diffs(aeds_.front().step()));
  std::vector<nd::Tensor> diffs;
  for (const Aed& a : aeds_) diffs.push_back(cache.diffs(a.step()));
  return CascadeDetector(aeds_).detect(diffs);
}

double calibrate_threshold(std::span<const double> clean_scores, double target_fpr) {
  require(!clean_scores.empty(), ErrorCode::invalid_argument, "no clean scores to calibrate on");
  require(target_fpr >= 0.0 && target_fpr <= 1.0, ErrorCode::out_of_range,
          "target false positive rate outside [0, 1]");
  std::vector<double> sorted(clean_scores.begin(), clean_scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto allowed = static_cast<std::size_t>(target_fpr * static_cast<double>(sorted.size()));
  return allowed >= sorted.size() ? sorted.back() : sorted[allowed];
}

Metrics evaluate_detector(const EvalDetector& detector, const LogitCache& clean,
                          const LogitCache& adversarial, std::span<const int> adv_labels,
                          DrDenominator dr_over) {
  const Verdicts c = detector.run(clean);
  const Verdicts a = detector.run(adversarial);
  return compute_metrics(adv_labels, adversarial.predictions(), c.flagged, a.flagged, dr_over);
}

}  // namespace hawkeye
