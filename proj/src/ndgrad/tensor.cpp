#include "ndgrad/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace hawkeye::nd {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    require(d > 0, ErrorCode::shape_mismatch,
            "tensor dimensions must be positive, got " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(data_.size() == element_count(shape_), ErrorCode::shape_mismatch,
          "data length " + std::to_string(data_.size()) +
              " does not match shape " + shape_string(shape_));
}

std::size_t Tensor::sample_size() const {
  if (shape_.empty()) return 0;
  return data_.size() / static_cast<std::size_t>(shape_[0]);
}

std::span<float> Tensor::sample(std::size_t n) {
  const std::size_t k = sample_size();
  return std::span<float>(data_).subspan(n * k, k);
}

std::span<const float> Tensor::sample(std::size_t n) const {
  const std::size_t k = sample_size();
  return std::span<const float>(data_).subspan(n * k, k);
}

Tensor Tensor::slice(std::size_t begin, std::size_t count) const {
  require(!shape_.empty() && begin + count <= static_cast<std::size_t>(shape_[0]) && count > 0,
          ErrorCode::out_of_range, "slice out of range for " + shape_string(shape_));
  Shape s = shape_;
  s[0] = static_cast<int>(count);
  const std::size_t k = sample_size();
  std::vector<float> d(data_.begin() + static_cast<std::ptrdiff_t>(begin * k),
                       data_.begin() + static_cast<std::ptrdiff_t>((begin + count) * k));
  return Tensor(std::move(s), std::move(d));
}

void Tensor::reshape(Shape shape) {
  require(element_count(shape) == data_.size(), ErrorCode::shape_mismatch,
          "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  shape_ = std::move(shape);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

Shape batched(std::size_t n, const Shape& sample_shape) {
  Shape s;
  s.reserve(sample_shape.size() + 1);
  s.push_back(static_cast<int>(n));
  s.insert(s.end(), sample_shape.begin(), sample_shape.end());
  return s;
}

}  // namespace hawkeye::nd
