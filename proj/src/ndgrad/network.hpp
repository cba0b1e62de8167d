#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ndgrad/tensor.hpp"

namespace hawkeye::nd {

enum class LayerKind { conv2d, relu, maxpool2x2, dense, flatten };
enum class Padding { same, valid };

const char* layer_kind_name(LayerKind kind) noexcept;

// One stage of a sequential network. Images flow through in NHWC layout.
//   conv2d: weight [k, k, in_channels, out_channels], bias [out_channels]
//   dense:  weight [in_features, out_features],       bias [out_features]
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int kernel = 0;
  Padding padding = Padding::same;
  int in_channels = 0;
  int out_channels = 0;
  int in_features = 0;
  int out_features = 0;
  Tensor weight;
  Tensor bias;

  bool has_parameters() const noexcept {
    return kind == LayerKind::conv2d || kind == LayerKind::dense;
  }
};

LayerSpec conv2d(int kernel, int in_channels, int out_channels, Padding padding = Padding::same);
LayerSpec dense(int in_features, int out_features);
LayerSpec relu();
LayerSpec maxpool2x2();
LayerSpec flatten();

// A validated pipeline of layers with fixed per-sample input shape.
class Network {
 public:
  Network() = default;
  Network(Shape input_shape, std::vector<LayerSpec> layers);

  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const noexcept { return shapes_.back(); }
  // Per-sample shape entering layer i; index layers().size() is the output.
  const Shape& shape_before(std::size_t i) const { return shapes_.at(i); }

  std::span<const LayerSpec> layers() const noexcept { return layers_; }
  std::span<LayerSpec> layers() noexcept { return layers_; }

  // Learnable tensors in layer order: weight then bias for each layer.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;

  // Truncated normal (stddev 0.1, cut at two stddevs) weights, biases 0.1.
  void init_parameters(std::uint64_t seed);

 private:
  Shape input_shape_;
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
};

// Activations recorded by forward() for a subsequent backward().
struct ForwardCache {
  std::vector<Tensor> inputs;               // input to each layer
  std::vector<std::vector<std::uint32_t>> argmax;  // maxpool winners
  bool valid = false;
};

// Runs the batch (shape {N} + input_shape) through the network. When a cache
// is supplied it is overwritten with everything backward() needs.
Tensor forward(const Network& net, const Tensor& batch, ForwardCache* cache = nullptr);

struct Gradients {
  std::vector<Tensor> parameters;  // parallel to Network::parameters()
  Tensor input;                    // gradient w.r.t. the forward batch
};

struct BackwardOptions {
  bool parameters = true;
  bool input = true;
};

// Reverse pass from an upstream gradient on the network output.
Gradients backward(const Network& net, const ForwardCache& cache, const Tensor& output_grad,
                   BackwardOptions options = {});

}  // namespace hawkeye::nd
