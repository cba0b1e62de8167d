#include "attacks/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/error.hpp"
#include "ndgrad/loss.hpp"

namespace hawkeye {

namespace {

// Images per forward/backward pass while crafting.
constexpr std::size_t attack_chunk = 100;

void check_batch(const Classifier& model, const nd::Tensor& images, std::span<const int> labels) {
  require(images.rank() == static_cast<int>(model.input_shape().size()) + 1 &&
              std::equal(model.input_shape().begin(), model.input_shape().end(),
                         images.shape().begin() + 1),
          ErrorCode::shape_mismatch,
          "attack batch " + nd::shape_string(images.shape()) + " does not match classifier input " +
              nd::shape_string(model.input_shape()));
  require(static_cast<std::size_t>(images.dim(0)) == labels.size(), ErrorCode::count_mismatch,
          "attack batch has " + std::to_string(images.dim(0)) + " images but " +
              std::to_string(labels.size()) + " labels");
  for (int y : labels) {
    require(y >= 0 && y < model.classes(), ErrorCode::out_of_range,
            "label " + std::to_string(y) + " outside 0.." + std::to_string(model.classes() - 1));
  }
}

}  // namespace

const char* attack_method_name(AttackMethod method) noexcept {
  return method == AttackMethod::fgsm ? "fgsm" : "ifgsm";
}

AttackMethod parse_attack_method(std::string_view name) {
  if (name == "fgsm") return AttackMethod::fgsm;
  if (name == "ifgsm" || name == "i-fgsm") return AttackMethod::ifgsm;
  fail(ErrorCode::invalid_argument, "unknown attack method '" + std::string(name) + "'");
}

float perturbation(int m) {
  require(m >= 1 && m <= max_level, ErrorCode::out_of_range,
          "perturbation multiplier " + std::to_string(m) + " outside 1..255");
  return static_cast<float>(m) * pixel_unit;
}

int sign(float v) {
  require(!std::isnan(v), ErrorCode::invalid_argument, "sign of NaN");
  return (v > 0.0f) - (v < 0.0f);
}

int ifgsm_iterations(int m) {
  perturbation(m);
  // min(m + 4, 1.25 m) in quarters keeps the rounding exact. Halves go to the
  // even neighbour, so m = 2 runs 2 iterations.
  const int quarters = std::min(4 * (m + 4), 5 * m);
  int n = (quarters + 2) / 4;
  if (quarters % 4 == 2 && n % 2 == 1) --n;
  return std::max(1, n);
}

nd::Tensor gradient_sign(const Classifier& model, const nd::Tensor& images,
                         std::span<const int> labels) {
  check_batch(model, images, labels);
  const std::size_t n = labels.size();
  nd::Tensor out(images.shape());
  const std::size_t per = images.sample_size();
  for (std::size_t b = 0; b < n; b += attack_chunk) {
    const std::size_t m = std::min(attack_chunk, n - b);
    // Summed loss so each sample's input gradient is that of its own J.
    auto lg = nd::cross_entropy_gradients(model.network(), images.slice(b, m),
                                          labels.subspan(b, m), nd::Reduction::sum,
                                          {.parameters = false, .input = true});
    const float* g = lg.grads.input.raw();
    float* dst = out.raw() + b * per;
    for (std::size_t i = 0; i < m * per; ++i) dst[i] = static_cast<float>(sign(g[i]));
  }
  return out;
}

nd::Tensor apply_signed_step(const nd::Tensor& images, const nd::Tensor& signs, float eps) {
  require(images.shape() == signs.shape(), ErrorCode::shape_mismatch,
          "sign tensor " + nd::shape_string(signs.shape()) + " does not match images " +
              nd::shape_string(images.shape()));
  nd::Tensor out(images.shape());
  for (std::size_t i = 0; i < images.size(); ++i) {
    out[i] = std::clamp(images[i] + eps * signs[i], 0.0f, 1.0f);
  }
  return out;
}

nd::Tensor fgsm(const Classifier& model, const nd::Tensor& images, std::span<const int> labels,
                int m) {
  const float eps = perturbation(m);
  return apply_signed_step(images, gradient_sign(model, images, labels), eps);
}

nd::Tensor ifgsm(const Classifier& model, const nd::Tensor& images, std::span<const int> labels,
                 int m) {
  const float eps = perturbation(m);
  const int iterations = ifgsm_iterations(m);
  nd::Tensor lo(images.shape()), hi(images.shape());
  for (std::size_t i = 0; i < images.size(); ++i) {
    lo[i] = std::max(0.0f, images[i] - eps);
    hi[i] = std::min(1.0f, images[i] + eps);
  }
  nd::Tensor x = images;
  for (int it = 0; it < iterations; ++it) {
    const nd::Tensor s = gradient_sign(model, x, labels);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::clamp(x[i] + pixel_unit * s[i], lo[i], hi[i]);
    }
  }
  return x;
}

nd::Tensor craft(const Classifier& model, AttackMethod method, const nd::Tensor& images,
                 std::span<const int> labels, int m) {
  return method == AttackMethod::fgsm ? fgsm(model, images, labels, m)
                                      : ifgsm(model, images, labels, m);
}

}  // namespace hawkeye
