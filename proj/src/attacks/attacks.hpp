#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "classifier/classifier.hpp"

namespace hawkeye {

// One raw intensity level in the normalized pixel domain.
inline constexpr float pixel_unit = 1.0f / 255.0f;
inline constexpr int max_level = 255;

enum class AttackMethod { fgsm, ifgsm };

const char* attack_method_name(AttackMethod method) noexcept;
AttackMethod parse_attack_method(std::string_view name);

// Perturbation budget m * pixel_unit; m must lie in 1..255.
float perturbation(int m);

// -1, 0 or +1. NaN is rejected.
int sign(float v);

// I-FGSM iteration count: min(m + 4, 1.25 m) rounded half to even, at least 1.
int ifgsm_iterations(int m);

// Elementwise sign of dJ(x, y)/dx for every image, y the true label.
// Stored as floats in {-1, 0, 1} with the shape of `images`.
nd::Tensor gradient_sign(const Classifier& model, const nd::Tensor& images,
                         std::span<const int> labels);

// x + eps * sign clamped to [0, 1]; `signs` as returned by gradient_sign.
nd::Tensor apply_signed_step(const nd::Tensor& images, const nd::Tensor& signs, float eps);

nd::Tensor fgsm(const Classifier& model, const nd::Tensor& images, std::span<const int> labels,
                int m);
nd::Tensor ifgsm(const Classifier& model, const nd::Tensor& images, std::span<const int> labels,
                 int m);
nd::Tensor craft(const Classifier& model, AttackMethod method, const nd::Tensor& images,
                 std::span<const int> labels, int m);

}  // namespace hawkeye
