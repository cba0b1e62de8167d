#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ndgrad/tensor.hpp"

namespace hawkeye {

enum class Split { train, test };

// Images (N x 28 x 28 x 1, values in [0,1]) with 0-based class labels.
struct LabeledDataset {
  nd::Tensor images;
  std::vector<int> labels;
  Split split = Split::test;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }

  // First `count` samples starting at `begin`, clipped to the dataset size.
  LabeledDataset subset(std::size_t begin, std::size_t count) const;
  LabeledDataset gather(std::span<const std::size_t> indices) const;
};

void validate_dataset(const LabeledDataset& data, int classes);

}  // namespace hawkeye
