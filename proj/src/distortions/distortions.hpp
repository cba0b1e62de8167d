#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "ndgrad/tensor.hpp"

namespace hawkeye {

enum class DistortionKind { brightness, noise_box, black_dots };

const char* distortion_kind_name(DistortionKind kind) noexcept;
DistortionKind parse_distortion_kind(std::string_view name);

// l: raw intensity (brightness, noise_box) or number of dots (black_dots);
// n: noise box side; w: dot side.
struct DistortionSpec {
  DistortionKind kind = DistortionKind::brightness;
  int l = 64;
  int n = 10;
  int w = 1;
  std::uint64_t seed = 11;
};

// The three operations work in place on one H x W x C image whose values are
// k/255 levels in [0, 1]. Results are clamped to the valid range.
void reduce_brightness(std::span<float> image, int l);
void noise_box(std::span<float> image, int height, int width, int channels, int n, int l,
               std::uint64_t seed);
void black_dots(std::span<float> image, int height, int width, int channels, int w, int l,
                std::uint64_t seed);

// Applies `spec` to every image of an N x H x W x C batch. Image i draws its
// positions and noise from a generator derived from (spec.seed, i).
nd::Tensor distort(const nd::Tensor& images, const DistortionSpec& spec);

}  // namespace hawkeye
