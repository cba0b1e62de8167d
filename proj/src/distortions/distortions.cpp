#include "distortions/distortions.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "common/error.hpp"
#include "common/seed.hpp"

namespace hawkeye {

namespace {

int to_raw(float v) { return static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }
float from_raw(int raw) { return static_cast<float>(std::clamp(raw, 0, 255)) / 255.0f; }

void check_image(std::span<float> image, int height, int width, int channels) {
  require(height > 0 && width > 0 && channels > 0 &&
              image.size() == static_cast<std::size_t>(height) * width * channels,
          ErrorCode::shape_mismatch, "image buffer does not match its declared shape");
}

}  // namespace

const char* distortion_kind_name(DistortionKind kind) noexcept {
  switch (kind) {
    case DistortionKind::brightness: return "brightness";
    case DistortionKind::noise_box: return "noise_box";
    case DistortionKind::black_dots: return "black_dots";
  }
  return "unknown";
}

DistortionKind parse_distortion_kind(std::string_view name) {
  if (name == "brightness") return DistortionKind::brightness;
  if (name == "noise_box" || name == "noise-box") return DistortionKind::noise_box;
  if (name == "black_dots" || name == "black-dots") return DistortionKind::black_dots;
  fail(ErrorCode::invalid_argument, "unknown distortion '" + std::string(name) + "'");
}

void reduce_brightness(std::span<float> image, int l) {
  require(l >= 1 && l <= 255, ErrorCode::out_of_range,
          "brightness reduction " + std::to_string(l) + " outside 1..255");
  for (float& v : image) v = from_raw(to_raw(v) - l);
}

void noise_box(std::span<float> image, int height, int width, int channels, int n, int l,
               std::uint64_t seed) {
  check_image(image, height, width, channels);
  require(n >= 1 && n <= height && n <= width, ErrorCode::out_of_range,
          "noise box side " + std::to_string(n) + " does not fit a " + std::to_string(height) +
              "x" + std::to_string(width) + " image");
  require(l >= 1 && l <= 255, ErrorCode::out_of_range,
          "noise amplitude " + std::to_string(l) + " outside 1..255");
  std::mt19937_64 rng(seed);
  const int top = std::uniform_int_distribution<int>(0, height - n)(rng);
  const int left = std::uniform_int_distribution<int>(0, width - n)(rng);
  std::uniform_int_distribution<int> noise(-l, l);
  for (int y = top; y < top + n; ++y) {
    for (int x = left; x < left + n; ++x) {
      for (int c = 0; c < channels; ++c) {
        float& v = image[(static_cast<std::size_t>(y) * width + x) * channels + c];
        v = from_raw(to_raw(v) + noise(rng));
      }
    }
  }
}

void black_dots(std::span<float> image, int height, int width, int channels, int w, int l,
                std::uint64_t seed) {
  check_image(image, height, width, channels);
  require(w >= 1 && w <= height && w <= width, ErrorCode::out_of_range,
          "dot side " + std::to_string(w) + " does not fit a " + std::to_string(height) + "x" +
              std::to_string(width) + " image");
  require(l >= 1, ErrorCode::out_of_range, "dot count must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> row(0, height - w), col(0, width - w);
  for (int d = 0; d < l; ++d) {
    const int top = row(rng);
    const int left = col(rng);
    for (int y = top; y < top + w; ++y) {
      float* p = image.data() + (static_cast<std::size_t>(y) * width + left) * channels;
      std::fill(p, p + static_cast<std::size_t>(w) * channels, 0.0f);
    }
  }
}

nd::Tensor distort(const nd::Tensor& images, const DistortionSpec& spec) {
  require(images.rank() == 4, ErrorCode::shape_mismatch,
          "distortions expect an N x H x W x C batch, got " + nd::shape_string(images.shape()));
  const int h = images.dim(1), w = images.dim(2), c = images.dim(3);
  nd::Tensor out = images;
  for (std::size_t i = 0; i < static_cast<std::size_t>(images.dim(0)); ++i) {
    auto img = out.sample(i);
    const std::uint64_t seed = derive_seed(spec.seed, i);
    switch (spec.kind) {
      case DistortionKind::brightness: reduce_brightness(img, spec.l); break;
      case DistortionKind::noise_box: noise_box(img, h, w, c, spec.n, spec.l, seed); break;
      case DistortionKind::black_dots: black_dots(img, h, w, c, spec.w, spec.l, seed); break;
    }
  }
  return out;
}

}  // namespace hawkeye
