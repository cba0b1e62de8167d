#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ndgrad/tensor.hpp"

namespace hawkeye {

// Sample Pearson correlation. Absent when either vector is constant (the
// coefficient is 0/0 there).
std::optional<double> pearson(std::span<const double> u, std::span<const double> v);
std::optional<double> pearson(std::span<const float> u, std::span<const float> v);

struct PccMatrix {
  std::vector<int> steps;
  std::vector<double> mean;          // row-major steps x steps
  std::vector<std::size_t> n_valid;  // images with a defined coefficient

  double at(std::size_t i, std::size_t j) const { return mean[i * steps.size() + j]; }
  std::size_t valid(std::size_t i, std::size_t j) const { return n_valid[i * steps.size() + j]; }
};

// `diffs[i]` holds the N x K difference vectors at steps[i]. Entry (i, j) is
// the mean over images of pearson(Z_i(x), Z_j(x)), skipping undefined ones.
PccMatrix pcc_matrix(std::span<const int> steps, std::span<const nd::Tensor> diffs);

}  // namespace hawkeye
