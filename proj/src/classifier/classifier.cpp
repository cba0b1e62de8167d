#include "classifier/classifier.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <random>

#include "common/error.hpp"
#include "common/log.hpp"
#include "ndgrad/adam.hpp"
#include "ndgrad/loss.hpp"

namespace hawkeye {

Classifier::Classifier(nd::Network network, std::uint64_t seed)
    : net_(std::move(network)), seed_(seed) {
  require(net_.output_shape().size() == 1, ErrorCode::shape_mismatch,
          "classifier output must be a logits vector, got " +
              nd::shape_string(net_.output_shape()));
}

std::vector<float> Classifier::logits(std::span<const float> image) const {
  const std::size_t k = nd::element_count(input_shape());
  require(image.size() == k, ErrorCode::shape_mismatch,
          "image has " + std::to_string(image.size()) + " values, classifier expects " +
              nd::shape_string(input_shape()));
  nd::Tensor batch(nd::batched(1, input_shape()), std::vector<float>(image.begin(), image.end()));
  const nd::Tensor out = nd::forward(net_, batch);
  return std::vector<float>(out.data().begin(), out.data().end());
}

std::vector<float> Classifier::probs(std::span<const float> image) const {
  return nd::softmax(logits(image));
}

int Classifier::predict(std::span<const float> image) const { return argmax(logits(image)); }

nd::Tensor Classifier::logits_batch(const nd::Tensor& images) const {
  require(images.rank() >= 1 && images.dim(0) > 0, ErrorCode::shape_mismatch,
          "empty image batch");
  const std::size_t n = static_cast<std::size_t>(images.dim(0));
  if (n <= inference_chunk) return nd::forward(net_, images);
  nd::Tensor out({static_cast<int>(n), classes()});
  for (std::size_t b = 0; b < n; b += inference_chunk) {
    const std::size_t m = std::min(inference_chunk, n - b);
    const nd::Tensor part = nd::forward(net_, images.slice(b, m));
    std::memcpy(out.sample(b).data(), part.raw(), part.size() * sizeof(float));
  }
  return out;
}

std::vector<int> Classifier::predict_batch(const nd::Tensor& images) const {
  const nd::Tensor z = logits_batch(images);
  std::vector<int> out(static_cast<std::size_t>(z.dim(0)));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = argmax(z.sample(i));
  return out;
}

int argmax(std::span<const float> values) {
  require(!values.empty(), ErrorCode::invalid_argument, "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

Classifier build_mnist_cnn(std::uint64_t seed) {
  std::vector<nd::LayerSpec> layers;
  layers.push_back(nd::conv2d(5, 1, 32));
  layers.push_back(nd::relu());
  layers.push_back(nd::maxpool2x2());
  layers.push_back(nd::conv2d(5, 32, 64));
  layers.push_back(nd::relu());
  layers.push_back(nd::maxpool2x2());
  layers.push_back(nd::flatten());
  layers.push_back(nd::dense(7 * 7 * 64, 1024));
  layers.push_back(nd::relu());
  layers.push_back(nd::dense(1024, mnist_classes));
  nd::Network net({mnist_side, mnist_side, 1}, std::move(layers));
  net.init_parameters(seed);
  return Classifier(std::move(net), seed);
}

std::size_t mnist_cnn_parameter_count() {
  return (5 * 5 * 1 * 32 + 32) + (5 * 5 * 32 * 64 + 64) + (7 * 7 * 64 * 1024 + 1024) +
         (1024 * 10 + 10);
}

Classifier build_substitute(std::uint64_t seed, std::uint64_t target_seed) {
  require(seed != target_seed, ErrorCode::invalid_argument,
          "substitute seed must differ from the target seed");
  return build_mnist_cnn(seed);
}

TrainResult train_classifier(Classifier& model, const LabeledDataset& train,
                             const TrainConfig& cfg, const ProgressFn& progress) {
  validate_dataset(train, model.classes());
  require(cfg.epochs > 0 && cfg.batch_size > 0, ErrorCode::invalid_argument,
          "epochs and batch size must be positive");

  auto& net = model.network();
  auto params = net.parameters();
  nd::AdamState adam(std::vector<const nd::Tensor*>(params.begin(), params.end()),
                     nd::AdamConfig{.learning_rate = cfg.learning_rate});

  std::mt19937_64 rng(cfg.seed ^ 0x5eed5eedULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t epoch_batches = 0;
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::size_t m = std::min(batch, order.size() - b);
      const auto mb = train.gather(std::span(order).subspan(b, m));
      auto lg = nd::cross_entropy_gradients(net, mb.images, mb.labels, nd::Reduction::mean,
                                            {.parameters = true, .input = false});
      nd::adam_step(params, lg.grads.parameters, adam);
      ++result.steps;
      ++epoch_batches;
      epoch_loss += lg.loss;
      result.last_batch_loss = lg.loss;
      if (progress) progress({epoch, result.steps, lg.loss});
      if (result.steps % 100 == 0) {
        logf("classifier epoch {} step {} loss {:.4f}", epoch + 1, result.steps, lg.loss);
      }
      if (cfg.max_steps && result.steps >= cfg.max_steps) break;
    }
    result.final_loss = static_cast<float>(epoch_loss / static_cast<double>(epoch_batches));
    if (cfg.max_steps && result.steps >= cfg.max_steps) break;
  }
  return result;
}

double accuracy(const Classifier& model, const LabeledDataset& data) {
  validate_dataset(data, model.classes());
  const auto pred = model.predict_batch(data.images);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

TrainedClassifier train_mnist_classifier(const LabeledDataset& train, const LabeledDataset& test,
                                         const TrainConfig& cfg, const ProgressFn& progress) {
  TrainedClassifier out{build_mnist_cnn(cfg.seed), {}, 0.0};
  out.train = train_classifier(out.model, train, cfg, progress);
  out.test_accuracy = accuracy(out.model, test);
  return out;
}

}  // namespace hawkeye
