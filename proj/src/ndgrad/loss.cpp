#include "ndgrad/loss.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace hawkeye::nd {
namespace {

// Writes softmax(logits) into probs and returns log-sum-exp of the shifted logits.
float shifted_softmax(std::span<const float> logits, std::span<float> probs, float& shift) {
  shift = *std::max_element(logits.begin(), logits.end());
  float total = 0.0f;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - shift);
    total += probs[i];
  }
  for (float& p : probs) p /= total;
  return std::log(total);
}

void check_label(int label, std::size_t classes) {
  require(label >= 0 && static_cast<std::size_t>(label) < classes, ErrorCode::out_of_range,
          "label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
}

}  // namespace

std::vector<float> softmax(std::span<const float> logits) {
  require(!logits.empty(), ErrorCode::invalid_argument, "softmax of empty vector");
  std::vector<float> p(logits.size());
  float shift = 0.0f;
  shifted_softmax(logits, p, shift);
  return p;
}

CrossEntropy softmax_cross_entropy(std::span<const float> logits, int label) {
  require(!logits.empty(), ErrorCode::invalid_argument, "cross entropy of empty logits");
  check_label(label, logits.size());
  CrossEntropy out;
  out.probs = Tensor({static_cast<int>(logits.size())});
  float shift = 0.0f;
  const float lse = shifted_softmax(logits, out.probs.data(), shift);
  out.loss = lse - (logits[static_cast<std::size_t>(label)] - shift);
  return out;
}

BatchCrossEntropy batch_cross_entropy(const Tensor& logits, std::span<const int> labels,
                                      Reduction reduction) {
  require(logits.rank() == 2, ErrorCode::shape_mismatch,
          "batch cross entropy expects NxK logits, got " + shape_string(logits.shape()));
  const std::size_t n = static_cast<std::size_t>(logits.dim(0));
  const std::size_t k = static_cast<std::size_t>(logits.dim(1));
  require(labels.size() == n, ErrorCode::shape_mismatch,
          "got " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " logits");
  BatchCrossEntropy out;
  out.probs = Tensor(logits.shape());
  out.logits_grad = Tensor(logits.shape());
  const float scale = reduction == Reduction::mean ? 1.0f / static_cast<float>(n) : 1.0f;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    check_label(labels[i], k);
    auto z = logits.sample(i);
    auto p = out.probs.sample(i);
    float shift = 0.0f;
    const float lse = shifted_softmax(z, p, shift);
    total += lse - (z[static_cast<std::size_t>(labels[i])] - shift);
    auto g = out.logits_grad.sample(i);
    for (std::size_t j = 0; j < k; ++j) g[j] = p[j] * scale;
    g[static_cast<std::size_t>(labels[i])] -= scale;
  }
  out.loss = static_cast<float>(reduction == Reduction::mean ? total / static_cast<double>(n)
                                                             : total);
  return out;
}

LossGradients cross_entropy_gradients(const Network& net, const Tensor& batch,
                                      std::span<const int> labels, Reduction reduction,
                                      BackwardOptions options) {
  ForwardCache cache;
  const Tensor logits = forward(net, batch, &cache);
  auto ce = batch_cross_entropy(logits, labels, reduction);
  LossGradients out;
  out.loss = ce.loss;
  out.grads = backward(net, cache, ce.logits_grad, options);
  return out;
}

}  // namespace hawkeye::nd
