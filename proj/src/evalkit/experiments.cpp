#include "evalkit/experiments.hpp"

#include <algorithm>
#include <set>

#include "common/error.hpp"
#include "common/log.hpp"

namespace hawkeye {

namespace {

std::vector<int> all_steps(std::span<const EvalDetector> detectors) {
  std::set<int> steps;
  for (const auto& d : detectors) {
    for (int s : d.steps()) steps.insert(s);
  }
  return {steps.begin(), steps.end()};
}

}  // namespace

std::vector<nd::Tensor> fgsm_levels(const Classifier& model, const LabeledDataset& data,
                                    std::span<const int> ms) {
  const nd::Tensor signs = gradient_sign(model, data.images, data.labels);
  std::vector<nd::Tensor> out;
  for (int m : ms) out.push_back(apply_signed_step(data.images, signs, perturbation(m)));
  return out;
}

std::vector<MetricsRow> evaluate_grid(const Classifier& target, const Classifier& crafting,
                                      const LabeledDataset& data,
                                      std::span<const EvalDetector> detectors,
                                      const GridSpec& spec) {
  validate_dataset(data, target.classes());
  require(!detectors.empty() && !spec.ms.empty(), ErrorCode::invalid_argument,
          "grid needs at least one detector and one perturbation level");
  const std::vector<int> steps = all_steps(detectors);
  const LogitCache clean(target, data.images, steps);

  std::vector<nd::Tensor> adversarial;
  if (spec.method == AttackMethod::fgsm) adversarial = fgsm_levels(crafting, data, spec.ms);

  std::vector<MetricsRow> rows;
  for (std::size_t i = 0; i < spec.ms.size(); ++i) {
    const int m = spec.ms[i];
    const nd::Tensor adv = spec.method == AttackMethod::fgsm
                               ? std::move(adversarial[i])
                               : ifgsm(crafting, data.images, data.labels, m);
    const LogitCache cache(target, adv, steps);
    for (const auto& d : detectors) {
      MetricsRow row{spec.attack, attack_method_name(spec.method), m, d.id(), d.step_label(),
                     d.threshold(), evaluate_detector(d, clean, cache, data.labels, spec.dr_over)};
      rows.push_back(std::move(row));
    }
    logf("grid {} m={} done", attack_method_name(spec.method), m);
  }
  return rows;
}

const MetricsRow* find_row(std::span<const MetricsRow> rows, int m, const std::string& detector_id) {
  const auto it = std::find_if(rows.begin(), rows.end(), [&](const MetricsRow& r) {
    return r.m == m && r.detector_id == detector_id;
  });
  return it == rows.end() ? nullptr : &*it;
}

}  // namespace hawkeye
