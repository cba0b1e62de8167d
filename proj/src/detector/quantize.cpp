#include "detector/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/error.hpp"
#include "ndgrad/loss.hpp"

namespace hawkeye {

void check_step(int s) {
  require(s >= 1 && s <= 255, ErrorCode::out_of_range,
          "quantization step " + std::to_string(s) + " outside 1..255");
}

int raw_level(float v) {
  const double raw = std::floor(static_cast<double>(v) * 255.0 + 1e-3);
  return static_cast<int>(std::clamp(raw, 0.0, 255.0));
}

float quantize_value(float v, int s) {
  check_step(s);
  const int raw = raw_level(v);
  return static_cast<float>(raw / s * s) / 255.0f;
}

nd::Tensor quantize(const nd::Tensor& images, int s) {
  check_step(s);
  nd::Tensor out(images.shape());
  for (std::size_t i = 0; i < images.size(); ++i) out[i] = quantize_value(images[i], s);
  return out;
}

nd::Tensor diff_vectors(const Classifier& model, const nd::Tensor& images, int s) {
  return diff_vectors(model.logits_batch(images), model.logits_batch(quantize(images, s)));
}

nd::Tensor diff_vectors(const nd::Tensor& logits, const nd::Tensor& reference_logits) {
  require(logits.shape() == reference_logits.shape() && logits.rank() == 2,
          ErrorCode::shape_mismatch,
          "logit batches " + nd::shape_string(logits.shape()) + " and " +
              nd::shape_string(reference_logits.shape()) + " do not pair up");
  nd::Tensor z(logits.shape());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = logits[i] - reference_logits[i];
  return z;
}

std::vector<double> squeeze_scores(const nd::Tensor& logits, const nd::Tensor& reference_logits) {
  require(logits.shape() == reference_logits.shape() && logits.rank() == 2,
          ErrorCode::shape_mismatch,
          "logit batches " + nd::shape_string(logits.shape()) + " and " +
              nd::shape_string(reference_logits.shape()) + " do not pair up");
  std::vector<double> out(static_cast<std::size_t>(logits.dim(0)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto p = nd::softmax(logits.sample(i));
    const auto q = nd::softmax(reference_logits.sample(i));
    double d = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) d += std::abs(static_cast<double>(p[k]) - q[k]);
    out[i] = std::min(d, 2.0);
  }
  return out;
}

std::vector<double> squeeze_scores(const Classifier& model, const nd::Tensor& images, int s) {
  return squeeze_scores(model.logits_batch(images), model.logits_batch(quantize(images, s)));
}

}  // namespace hawkeye
