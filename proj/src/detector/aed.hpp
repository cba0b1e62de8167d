#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ndgrad/network.hpp"

namespace hawkeye {

inline constexpr float default_threshold = 0.5f;

// Detector network over a K-long difference vector: dense K->10->10->10->1
// with relu between layers. The sigmoid is applied by score().
nd::Network build_aed_network(int classes, std::uint64_t seed);

double sigmoid(double u);

// Per-image AED outputs and the verdicts they imply.
struct Verdicts {
  std::vector<double> scores;
  std::vector<std::uint8_t> flagged;

  std::size_t size() const noexcept { return scores.size(); }
  std::size_t count_flagged() const;
};

class Aed {
 public:
  Aed() = default;
  Aed(nd::Network network, int step, float threshold = default_threshold);

  int step() const noexcept { return step_; }
  float threshold() const noexcept { return threshold_; }
  void set_threshold(float t);
  int classes() const { return net_.input_shape().at(0); }
  const nd::Network& network() const noexcept { return net_; }
  nd::Network& network() noexcept { return net_; }

  // D(x) in (0, 1) for one difference vector.
  double score(std::span<const float> z) const;
  // Scores for an N x K batch of difference vectors.
  std::vector<double> scores(const nd::Tensor& z) const;
  // Flags iff D > T, strictly.
  bool flags(double score) const noexcept { return score > threshold_; }
  Verdicts detect(const nd::Tensor& z) const;

 private:
  nd::Network net_;
  int step_ = 0;
  float threshold_ = default_threshold;
};

// Parallel AEDs with distinct step sizes; an input is flagged only when every
// member flags it.
class CascadeDetector {
 public:
  explicit CascadeDetector(std::vector<Aed> members);

  std::span<const Aed> members() const noexcept { return members_; }
  std::vector<int> steps() const;

  // `diffs[i]` holds the difference vectors at members()[i].step(). The
  // reported score is the smallest member score.
  Verdicts detect(std::span<const nd::Tensor> diffs) const;

 private:
  std::vector<Aed> members_;
};

}  // namespace hawkeye
