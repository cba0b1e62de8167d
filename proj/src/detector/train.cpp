#include "detector/train.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "attacks/attacks.hpp"
#include "common/error.hpp"
#include "common/log.hpp"
#include "common/seed.hpp"
#include "detector/quantize.hpp"
#include "ndgrad/adam.hpp"

namespace hawkeye {

namespace {

// Images per classifier pass while building difference vectors.
constexpr std::size_t logit_chunk = 1000;

constexpr std::uint64_t perturbation_stream = 0xE75;
constexpr std::uint64_t init_stream = 0xA1;
constexpr std::uint64_t order_stream = 0x0D;

void copy_rows(const nd::Tensor& src, nd::Tensor& dst, std::size_t row) {
  std::memcpy(dst.raw() + row * dst.sample_size(), src.raw(), src.size() * sizeof(float));
}

struct StepState {
  int step = 0;
  nd::Tensor clean_z;  // N x K, fixed for the whole run
  nd::Tensor adv_z;    // N x K, rebuilt every epoch
  TrainedAed result;
  nd::AdamState adam;
  std::mt19937_64 order_rng;
};

}  // namespace

const char* aed_loss_name(AedLoss loss) noexcept {
  return loss == AedLoss::linear ? "linear" : "cross_entropy";
}

AedLoss parse_aed_loss(std::string_view name) {
  if (name == "linear") return AedLoss::linear;
  if (name == "cross_entropy" || name == "xent") return AedLoss::cross_entropy;
  fail(ErrorCode::invalid_argument, "unknown detector loss '" + std::string(name) + "'");
}

std::vector<TrainedAed> train_aeds(const Classifier& model, const LabeledDataset& data,
                                   std::span<const int> steps, const AedTrainConfig& cfg,
                                   const AedProgressFn& progress) {
  validate_dataset(data, model.classes());
  require(!steps.empty(), ErrorCode::invalid_argument, "no step sizes to train");
  perturbation(cfg.eps_max);
  require(cfg.epochs > 0 && cfg.batch_size > 0 && cfg.learning_rate > 0.0f,
          ErrorCode::invalid_argument, "epochs, batch size and learning rate must be positive");
  std::set<int> distinct;
  for (int s : steps) {
    check_step(s);
    require(distinct.insert(s).second, ErrorCode::invalid_argument,
            "step size " + std::to_string(s) + " listed twice");
  }

  const std::size_t n = data.size();
  const int k = model.classes();
  const std::size_t per = data.images.sample_size();

  // The gradient sign at a clean image does not depend on the perturbation
  // size, so one backward pass per image serves every epoch.
  std::vector<std::int8_t> signs(n * per);
  std::vector<StepState> states(steps.size());
  for (std::size_t j = 0; j < steps.size(); ++j) {
    StepState& st = states[j];
    st.step = steps[j];
    st.clean_z = nd::Tensor({static_cast<int>(n), k});
    st.adv_z = nd::Tensor({static_cast<int>(n), k});
    Aed aed(build_aed_network(k, derive_seed(cfg.seed, init_stream + 1000 * st.step)), st.step,
            cfg.threshold);
    st.result = TrainedAed{std::move(aed), cfg, {}, 0};
    auto params = st.result.aed.network().parameters();
    st.adam = nd::AdamState(std::vector<const nd::Tensor*>(params.begin(), params.end()),
                            nd::AdamConfig{.learning_rate = cfg.learning_rate});
    st.order_rng.seed(derive_seed(cfg.seed, order_stream + 1000 * st.step));
  }
  for (std::size_t b = 0; b < n; b += logit_chunk) {
    const std::size_t m = std::min(logit_chunk, n - b);
    const auto part = data.subset(b, m);
    const nd::Tensor s = gradient_sign(model, part.images, part.labels);
    for (std::size_t i = 0; i < s.size(); ++i) signs[b * per + i] = static_cast<std::int8_t>(s[i]);
    const nd::Tensor g = model.logits_batch(part.images);
    for (StepState& st : states) {
      copy_rows(diff_vectors(g, model.logits_batch(quantize(part.images, st.step))), st.clean_z,
                b);
    }
  }
  logf("detector training: {} images, steps {}", n, steps.size());

  std::mt19937_64 eps_rng(derive_seed(cfg.seed, perturbation_stream));
  std::uniform_int_distribution<int> level(1, cfg.eps_max);
  std::vector<std::size_t> order(n);
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t b = 0; b < n; b += logit_chunk) {
      const std::size_t m = std::min(logit_chunk, n - b);
      nd::Tensor adv = data.images.slice(b, m);
      for (std::size_t i = 0; i < m; ++i) {
        const float eps = static_cast<float>(level(eps_rng)) * pixel_unit;
        float* x = adv.sample(i).data();
        const std::int8_t* sg = signs.data() + (b + i) * per;
        for (std::size_t p = 0; p < per; ++p) x[p] = std::clamp(x[p] + eps * sg[p], 0.0f, 1.0f);
      }
      const nd::Tensor g = model.logits_batch(adv);
      for (StepState& st : states) {
        copy_rows(diff_vectors(g, model.logits_batch(quantize(adv, st.step))), st.adv_z, b);
      }
    }

    for (StepState& st : states) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), st.order_rng);
      auto& net = st.result.aed.network();
      auto params = net.parameters();
      AedEpochStats stats{st.step, epoch + 1, 0.0, 2.0, 0.0};
      for (std::size_t b = 0; b < n; b += batch) {
        const std::size_t m = std::min(batch, n - b);
        // Rows [0, m) are clean difference vectors, rows [m, 2m) their
        // perturbed counterparts.
        nd::Tensor z({static_cast<int>(2 * m), k});
        for (std::size_t i = 0; i < m; ++i) {
          const std::size_t src = order[b + i];
          std::memcpy(z.sample(i).data(), st.clean_z.sample(src).data(), k * sizeof(float));
          std::memcpy(z.sample(m + i).data(), st.adv_z.sample(src).data(), k * sizeof(float));
        }
        nd::ForwardCache cache;
        const nd::Tensor u = nd::forward(net, z, &cache);
        nd::Tensor grad(u.shape());
        const double scale = 1.0 / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) {
          const double dc = sigmoid(u[i]);
          const double da = sigmoid(u[m + i]);
          const double objective = (1.0 - dc) + da;
          stats.mean_objective += objective;
          stats.min_objective = std::min(stats.min_objective, objective);
          stats.max_objective = std::max(stats.max_objective, objective);
          if (cfg.loss == AedLoss::linear) {
            grad[i] = static_cast<float>(scale * dc * (1.0 - dc));
            grad[m + i] = static_cast<float>(-scale * da * (1.0 - da));
          } else {
            grad[i] = static_cast<float>(scale * dc);
            grad[m + i] = static_cast<float>(-scale * (1.0 - da));
          }
        }
        const auto grads = nd::backward(net, cache, grad, {.parameters = true, .input = false});
        nd::adam_step(params, grads.parameters, st.adam);
        ++st.result.optimizer_steps;
      }
      stats.mean_objective /= static_cast<double>(n);
      st.result.epochs.push_back(stats);
      logf("detector s={} epoch {} objective {:.4f}", st.step, epoch + 1, stats.mean_objective);
      if (progress) progress(stats);
    }
  }

  std::vector<TrainedAed> out;
  for (StepState& st : states) out.push_back(std::move(st.result));
  return out;
}

TrainedAed train_aed(const Classifier& model, const LabeledDataset& data, int step,
                     const AedTrainConfig& cfg, const AedProgressFn& progress) {
  const int steps[] = {step};
  return std::move(train_aeds(model, data, steps, cfg, progress).front());
}

}  // namespace hawkeye
