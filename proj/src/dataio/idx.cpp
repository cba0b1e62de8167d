#include "dataio/idx.hpp"

#include <cstdint>
#include <fstream>
#include <vector>

#include "common/error.hpp"

namespace hawkeye {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

std::uint32_t header_field(const std::vector<std::uint8_t>& b, std::size_t off,
                           const std::filesystem::path& path) {
  require(b.size() >= off + 4, ErrorCode::truncated, path.string() + ": truncated IDX header");
  return read_be32(b, off);
}

}  // namespace

LabeledDataset load_mnist(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path, Split split) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  const auto img_magic = header_field(img, 0, images_path);
  require(img_magic == idx_image_magic, ErrorCode::bad_magic,
          images_path.string() + ": magic " + std::to_string(img_magic) +
              " is not the IDX image magic 2051");
  const auto lab_magic = header_field(lab, 0, labels_path);
  require(lab_magic == idx_label_magic, ErrorCode::bad_magic,
          labels_path.string() + ": magic " + std::to_string(lab_magic) +
              " is not the IDX label magic 2049");

  const std::uint32_t n = header_field(img, 4, images_path);
  const std::uint32_t rows = header_field(img, 8, images_path);
  const std::uint32_t cols = header_field(img, 12, images_path);
  const std::uint32_t n_labels = header_field(lab, 4, labels_path);
  require(rows == 28 && cols == 28, ErrorCode::shape_mismatch,
          images_path.string() + ": expected 28x28 images, got " + std::to_string(rows) + "x" +
              std::to_string(cols));
  require(n > 0, ErrorCode::truncated, images_path.string() + ": zero images");

  const std::size_t pixels = std::size_t{rows} * cols;
  require(img.size() >= 16 + std::size_t{n} * pixels, ErrorCode::truncated,
          images_path.string() + ": truncated, header declares " + std::to_string(n) + " images");
  require(lab.size() >= 8 + std::size_t{n_labels}, ErrorCode::truncated,
          labels_path.string() + ": truncated, header declares " + std::to_string(n_labels) +
              " labels");
  require(n == n_labels, ErrorCode::count_mismatch,
          "image count " + std::to_string(n) + " does not match label count " +
              std::to_string(n_labels));

  LabeledDataset out;
  out.split = split;
  out.images = nd::Tensor({static_cast<int>(n), static_cast<int>(rows), static_cast<int>(cols), 1});
  float* dst = out.images.raw();
  for (std::size_t i = 0; i < std::size_t{n} * pixels; ++i) {
    dst[i] = static_cast<float>(img[16 + i]) / 255.0f;
  }
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = lab[8 + i];
    require(y <= 9, ErrorCode::out_of_range,
            labels_path.string() + ": label " + std::to_string(y) + " outside 0..9");
    out.labels[i] = y;
  }
  return out;
}

LabeledDataset load_mnist_split(const std::filesystem::path& dir, Split split) {
  if (split == Split::train) {
    return load_mnist(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", split);
  }
  return load_mnist(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", split);
}

}  // namespace hawkeye
