#include "detector/aed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "common/error.hpp"
#include "detector/quantize.hpp"

namespace hawkeye {

nd::Network build_aed_network(int classes, std::uint64_t seed) {
  require(classes >= 2, ErrorCode::invalid_argument, "detector needs at least two classes");
  std::vector<nd::LayerSpec> layers;
  layers.push_back(nd::dense(classes, 10));
  layers.push_back(nd::relu());
  layers.push_back(nd::dense(10, 10));
  layers.push_back(nd::relu());
  layers.push_back(nd::dense(10, 10));
  layers.push_back(nd::relu());
  layers.push_back(nd::dense(10, 1));
  nd::Network net({classes}, std::move(layers));
  net.init_parameters(seed);
  return net;
}

double sigmoid(double u) {
  const double d = u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
  // Keep the open interval even where double rounding would reach 0 or 1.
  return std::clamp(d, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

std::size_t Verdicts::count_flagged() const {
  return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), std::uint8_t{1}));
}

Aed::Aed(nd::Network network, int step, float threshold) : net_(std::move(network)), step_(step) {
  check_step(step);
  require(net_.input_shape().size() == 1 && net_.output_shape() == nd::Shape{1},
          ErrorCode::shape_mismatch,
          "detector network must map a vector to one value, got " +
              nd::shape_string(net_.input_shape()) + " -> " +
              nd::shape_string(net_.output_shape()));
  set_threshold(threshold);
}

void Aed::set_threshold(float t) {
  require(t >= 0.0f && t <= 1.0f, ErrorCode::out_of_range,
          "threshold " + std::to_string(t) + " outside [0, 1]");
  threshold_ = t;
}

double Aed::score(std::span<const float> z) const {
  require(z.size() == static_cast<std::size_t>(classes()), ErrorCode::shape_mismatch,
          "difference vector has " + std::to_string(z.size()) + " entries, detector expects " +
              std::to_string(classes()));
  nd::Tensor batch({1, classes()}, std::vector<float>(z.begin(), z.end()));
  return sigmoid(nd::forward(net_, batch)[0]);
}

std::vector<double> Aed::scores(const nd::Tensor& z) const {
  require(z.rank() == 2 && z.dim(1) == classes(), ErrorCode::shape_mismatch,
          "difference batch " + nd::shape_string(z.shape()) + " does not match detector width " +
              std::to_string(classes()));
  const nd::Tensor u = nd::forward(net_, z);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid(u[i]);
  return out;
}

Verdicts Aed::detect(const nd::Tensor& z) const {
  Verdicts v;
  v.scores = scores(z);
  v.flagged.resize(v.scores.size());
  for (std::size_t i = 0; i < v.scores.size(); ++i) v.flagged[i] = flags(v.scores[i]);
  return v;
}

CascadeDetector::CascadeDetector(std::vector<Aed> members) : members_(std::move(members)) {
  require(members_.size() >= 2, ErrorCode::invalid_argument,
          "a cascade needs at least two detectors");
  std::set<int> seen;
  for (const Aed& a : members_) {
    require(seen.insert(a.step()).second, ErrorCode::invalid_argument,
            "cascade members must have distinct step sizes, " + std::to_string(a.step()) +
                " repeats");
    require(a.classes() == members_.front().classes(), ErrorCode::shape_mismatch,
            "cascade members disagree on the class count");
  }
}

std::vector<int> CascadeDetector::steps() const {
  std::vector<int> out;
  for (const Aed& a : members_) out.push_back(a.step());
  return out;
}

Verdicts CascadeDetector::detect(std::span<const nd::Tensor> diffs) const {
  require(diffs.size() == members_.size(), ErrorCode::count_mismatch,
          "cascade has " + std::to_string(members_.size()) + " members but got " +
              std::to_string(diffs.size()) + " difference batches");
  Verdicts out;
  for (std::size_t m = 0; m < members_.size(); ++m) {
    const Verdicts v = members_[m].detect(diffs[m]);
    if (m == 0) {
      out = v;
      continue;
    }
    require(v.size() == out.size(), ErrorCode::count_mismatch,
            "cascade members scored different numbers of images");
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.scores[i] = std::min(out.scores[i], v.scores[i]);
      out.flagged[i] = out.flagged[i] && v.flagged[i];
    }
  }
  return out;
}

}  // namespace hawkeye
