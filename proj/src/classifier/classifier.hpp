#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dataio/dataset.hpp"
#include "ndgrad/network.hpp"

namespace hawkeye {

inline constexpr int mnist_classes = 10;
inline constexpr int mnist_side = 28;

// The target DNN: a network whose output is a logits vector of length K.
// Immutable once trained; every query method is const and thread-safe.
class Classifier {
 public:
  Classifier() = default;
  Classifier(nd::Network network, std::uint64_t seed);

  const nd::Network& network() const noexcept { return net_; }
  nd::Network& network() noexcept { return net_; }
  std::uint64_t seed() const noexcept { return seed_; }
  int classes() const { return net_.output_shape().at(0); }
  const nd::Shape& input_shape() const { return net_.input_shape(); }

  // Single image with shape input_shape().
  std::vector<float> logits(std::span<const float> image) const;
  std::vector<float> probs(std::span<const float> image) const;
  int predict(std::span<const float> image) const;

  // Batched variants; images is {N} + input_shape().
  nd::Tensor logits_batch(const nd::Tensor& images) const;
  std::vector<int> predict_batch(const nd::Tensor& images) const;

 private:
  nd::Network net_;
  std::uint64_t seed_ = 0;
};

// Index of the largest element; ties go to the lowest index.
int argmax(std::span<const float> values);

// conv5x5x32 -> relu -> pool -> conv5x5x64 -> relu -> pool -> flatten ->
// dense1024 -> relu -> dense10, "same" padding, weights drawn from `seed`.
Classifier build_mnist_cnn(std::uint64_t seed);
std::size_t mnist_cnn_parameter_count();

// Same architecture and recipe as the target, different initialization.
Classifier build_substitute(std::uint64_t seed, std::uint64_t target_seed);

struct TrainConfig {
  int epochs = 5;
  int batch_size = 100;
  float learning_rate = 2e-4f;
  std::uint64_t seed = 1;
  // Optional cap on optimizer steps (0 = run all epochs).
  std::size_t max_steps = 0;
};

struct TrainProgress {
  int epoch = 0;
  std::size_t step = 0;
  float batch_loss = 0.0f;
};

struct TrainResult {
  float final_loss = 0.0f;     // mean loss over the last epoch
  float last_batch_loss = 0.0f;
  std::size_t steps = 0;
};

using ProgressFn = std::function<void(const TrainProgress&)>;

// Minimizes mean cross entropy with Adam; the sample order is reshuffled
// each epoch with a generator seeded from cfg.seed.
TrainResult train_classifier(Classifier& model, const LabeledDataset& train,
                             const TrainConfig& cfg, const ProgressFn& progress = {});

double accuracy(const Classifier& model, const LabeledDataset& data);

struct TrainedClassifier {
  Classifier model;
  TrainResult train;
  double test_accuracy = 0.0;
};

// Builds the MNIST CNN from cfg.seed, trains it and scores the test split.
TrainedClassifier train_mnist_classifier(const LabeledDataset& train, const LabeledDataset& test,
                                         const TrainConfig& cfg, const ProgressFn& progress = {});

// Rows processed per forward pass by the batched helpers.
inline constexpr std::size_t inference_chunk = 250;

}  // namespace hawkeye
