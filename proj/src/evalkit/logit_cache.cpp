#include "evalkit/logit_cache.hpp"

#include <string>

#include "common/error.hpp"
#include "detector/quantize.hpp"

namespace hawkeye {

LogitCache::LogitCache(const Classifier& model, const nd::Tensor& images,
                       std::span<const int> steps) {
  logits_ = model.logits_batch(images);
  predictions_.resize(static_cast<std::size_t>(logits_.dim(0)));
  for (std::size_t i = 0; i < predictions_.size(); ++i) predictions_[i] = argmax(logits_.sample(i));
  for (int s : steps) {
    if (!references_.count(s)) references_.emplace(s, model.logits_batch(quantize(images, s)));
  }
}

const nd::Tensor& LogitCache::reference_logits(int step) const {
  const auto it = references_.find(step);
  require(it != references_.end(), ErrorCode::bad_state,
          "no reference logits cached for step " + std::to_string(step));
  return it->second;
}

std::vector<int> LogitCache::steps() const {
  std::vector<int> out;
  for (const auto& [s, t] : references_) out.push_back(s);
  return out;
}

nd::Tensor LogitCache::diffs(int step) const {
  return diff_vectors(logits_, reference_logits(step));
}

std::vector<double> LogitCache::squeeze_scores(int step) const {
  return hawkeye::squeeze_scores(logits_, reference_logits(step));
}

}  // namespace hawkeye
