#pragma once

#include <filesystem>

#include "dataio/dataset.hpp"

namespace hawkeye {

inline constexpr unsigned idx_image_magic = 2051;
inline constexpr unsigned idx_label_magic = 2049;

// Parses a pair of big-endian IDX files (images: magic 2051, dims N,28,28;
// labels: magic 2049, dim N). Pixels are scaled byte/255.
// Errors: ErrorCode::bad_magic, ::truncated, ::count_mismatch, ::io.
LabeledDataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels,
                          Split split);

// Canonical file names inside an MNIST directory.
LabeledDataset load_mnist_split(const std::filesystem::path& dir, Split split);

}  // namespace hawkeye
