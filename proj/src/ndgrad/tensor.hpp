#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hawkeye::nd {

using Shape = std::vector<int>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major float32 array. The leading dimension is the batch
// dimension wherever a tensor holds more than one sample.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  float* raw() noexcept { return data_.data(); }
  const float* raw() const noexcept { return data_.data(); }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // Number of elements in one sample, i.e. the product of all but dim 0.
  std::size_t sample_size() const;
  std::span<float> sample(std::size_t n);
  std::span<const float> sample(std::size_t n) const;

  // Copies samples [begin, begin + count) into a new tensor.
  Tensor slice(std::size_t begin, std::size_t count) const;
  void reshape(Shape shape);
  bool all_finite() const noexcept;
  void fill(float value);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<float> data_;
};

// Prepends a batch dimension: {n} + sample_shape.
Shape batched(std::size_t n, const Shape& sample_shape);

}  // namespace hawkeye::nd
