#pragma once

#include <map>
#include <span>
#include <vector>

#include "classifier/classifier.hpp"

namespace hawkeye {

// Classifier logits for one image set and for its quantized references at a
// number of step sizes. Everything a detector needs is derived from these,
// so each image goes through the classifier once per step.
class LogitCache {
 public:
  LogitCache() = default;
  LogitCache(const Classifier& model, const nd::Tensor& images, std::span<const int> steps);

  std::size_t size() const noexcept { return predictions_.size(); }
  const nd::Tensor& logits() const noexcept { return logits_; }
  const nd::Tensor& reference_logits(int step) const;
  const std::vector<int>& predictions() const noexcept { return predictions_; }
  bool has_step(int step) const { return references_.count(step) != 0; }
  std::vector<int> steps() const;

  // Z = G(x) - G(q_s(x)), N x K.
  nd::Tensor diffs(int step) const;
  // ||F(x) - F(q_s(x))||_1 per image.
  std::vector<double> squeeze_scores(int step) const;

 private:
  nd::Tensor logits_;
  std::map<int, nd::Tensor> references_;
  std::vector<int> predictions_;
};

}  // namespace hawkeye
