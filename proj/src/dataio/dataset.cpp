#include "dataio/dataset.hpp"

#include <algorithm>
#include <cstring>

#include "common/error.hpp"

namespace hawkeye {

LabeledDataset LabeledDataset::subset(std::size_t begin, std::size_t count) const {
  require(begin < size(), ErrorCode::out_of_range, "subset start beyond dataset end");
  count = std::min(count, size() - begin);
  LabeledDataset out;
  out.split = split;
  out.images = images.slice(begin, count);
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    labels.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

LabeledDataset LabeledDataset::gather(std::span<const std::size_t> indices) const {
  require(!indices.empty(), ErrorCode::invalid_argument, "gather with no indices");
  LabeledDataset out;
  out.split = split;
  nd::Shape shape = images.shape();
  shape[0] = static_cast<int>(indices.size());
  out.images = nd::Tensor(shape);
  out.labels.reserve(indices.size());
  const std::size_t k = images.sample_size();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < size(), ErrorCode::out_of_range, "gather index out of range");
    std::memcpy(out.images.sample(i).data(), images.sample(indices[i]).data(), k * sizeof(float));
    out.labels.push_back(labels[indices[i]]);
  }
  return out;
}

void validate_dataset(const LabeledDataset& data, int classes) {
  require(!data.empty(), ErrorCode::invalid_argument, "dataset is empty");
  require(data.images.rank() >= 2 && static_cast<std::size_t>(data.images.dim(0)) == data.size(),
          ErrorCode::count_mismatch,
          "dataset has " + std::to_string(data.size()) + " labels for images " +
              nd::shape_string(data.images.shape()));
  for (int y : data.labels) {
    require(y >= 0 && y < classes, ErrorCode::out_of_range,
            "label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
  }
}

}  // namespace hawkeye
