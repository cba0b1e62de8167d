#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "classifier/classifier.hpp"
#include "detector/aed.hpp"

namespace hawkeye {

enum class AedLoss {
  linear,         // mean of D(x) - D(x*), i.e. ascend (1 - D(x)) + D(x*)
  cross_entropy,  // -log(1 - D(x)) - log D(x*), ablation only
};

const char* aed_loss_name(AedLoss loss) noexcept;
AedLoss parse_aed_loss(std::string_view name);

struct AedTrainConfig {
  int eps_max = 32;  // largest training perturbation, in raw levels
  int epochs = 5;
  int batch_size = 100;
  float learning_rate = 2e-4f;
  std::uint64_t seed = 7;
  float threshold = default_threshold;
  AedLoss loss = AedLoss::linear;
};

struct AedEpochStats {
  int step = 0;
  int epoch = 0;
  double mean_objective = 0.0;  // mean of (1 - D(x)) + D(x*)
  double min_objective = 0.0;
  double max_objective = 0.0;
};

struct TrainedAed {
  Aed aed;
  AedTrainConfig config;
  std::vector<AedEpochStats> epochs;
  std::size_t optimizer_steps = 0;
};

using AedProgressFn = std::function<void(const AedEpochStats&)>;

// Trains one detector per step size against `model` on `data`. Every epoch
// each image gets a fresh FGSM example at a perturbation drawn uniformly
// from 1..eps_max levels; the draws are shared across step sizes, while
// initialization and minibatch order come from per-step streams. Training
// several steps together is therefore identical to training them one by one.
std::vector<TrainedAed> train_aeds(const Classifier& model, const LabeledDataset& data,
                                   std::span<const int> steps, const AedTrainConfig& cfg,
                                   const AedProgressFn& progress = {});

TrainedAed train_aed(const Classifier& model, const LabeledDataset& data, int step,
                     const AedTrainConfig& cfg, const AedProgressFn& progress = {});

}  // namespace hawkeye
