#pragma once

#include <span>
#include <vector>

#include "ndgrad/network.hpp"

namespace hawkeye::nd {

struct CrossEntropy {
  float loss = 0.0f;  // J = -log F[label]
  Tensor probs;       // F = softmax(logits)
};

// Single-sample softmax cross entropy. Logits are max-shifted before
// exponentiation so large magnitudes cannot overflow.
CrossEntropy softmax_cross_entropy(std::span<const float> logits, int label);

std::vector<float> softmax(std::span<const float> logits);

enum class Reduction { mean, sum };

struct BatchCrossEntropy {
  float loss = 0.0f;    // mean or summed J over the batch
  Tensor probs;         // N x K
  Tensor logits_grad;   // dLoss/dlogits, N x K
};

BatchCrossEntropy batch_cross_entropy(const Tensor& logits, std::span<const int> labels,
                                      Reduction reduction = Reduction::mean);

struct LossGradients {
  float loss = 0.0f;
  Gradients grads;
};

// forward + cross entropy + backward in one call. With Reduction::sum the
// input gradient of each sample is the gradient of that sample's own J.
LossGradients cross_entropy_gradients(const Network& net, const Tensor& batch,
                                      std::span<const int> labels,
                                      Reduction reduction = Reduction::mean,
                                      BackwardOptions options = {});

}  // namespace hawkeye::nd
