#include "ndgrad/network.hpp"

#include <algorithm>
#include <cstring>
#include <random>

#include <Eigen/Core>

#include "common/error.hpp"

namespace hawkeye::nd {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<float, 1, Eigen::Dynamic>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstRowVectorMap = Eigen::Map<const RowVector>;

std::string layer_label(std::size_t i, const LayerSpec& layer) {
  return "layer " + std::to_string(i) + " (" + layer_kind_name(layer.kind) + ")";
}

int pad_before(const LayerSpec& layer) {
  return layer.padding == Padding::same ? (layer.kernel - 1) / 2 : 0;
}

int conv_out_extent(const LayerSpec& layer, int extent) {
  return layer.padding == Padding::same ? extent : extent - layer.kernel + 1;
}

Shape output_shape_of(std::size_t index, const LayerSpec& layer, const Shape& in) {
  const auto label = layer_label(index, layer);
  switch (layer.kind) {
    case LayerKind::conv2d: {
      require(in.size() == 3, ErrorCode::shape_mismatch,
              label + " expects HxWxC input, got " + shape_string(in));
      require(in[2] == layer.in_channels, ErrorCode::shape_mismatch,
              label + " expects " + std::to_string(layer.in_channels) + " channels, got " +
                  shape_string(in));
      const int oh = conv_out_extent(layer, in[0]);
      const int ow = conv_out_extent(layer, in[1]);
      require(oh > 0 && ow > 0, ErrorCode::shape_mismatch,
              label + " kernel larger than input " + shape_string(in));
      return {oh, ow, layer.out_channels};
    }
    case LayerKind::maxpool2x2:
      require(in.size() == 3 && in[0] >= 2 && in[1] >= 2, ErrorCode::shape_mismatch,
              label + " expects HxWxC input with H,W >= 2, got " + shape_string(in));
      return {in[0] / 2, in[1] / 2, in[2]};
    case LayerKind::dense:
      require(in.size() == 1 && in[0] == layer.in_features, ErrorCode::shape_mismatch,
              label + " expects [" + std::to_string(layer.in_features) + "] input, got " +
                  shape_string(in));
      return {layer.out_features};
    case LayerKind::flatten:
      return {static_cast<int>(element_count(in))};
    case LayerKind::relu:
      return in;
  }
  return in;
}

// Images per im2col chunk so one chunk's column buffer stays around 512 KiB.
int conv_chunk(const LayerSpec& layer, int oh, int ow) {
  const long per_image = static_cast<long>(oh) * ow * layer.kernel * layer.kernel * layer.in_channels;
  return static_cast<int>(std::max<long>(1, 131072 / std::max<long>(per_image, 1)));
}

// Column buffer for images [b0, b0 + count): one row per output pixel, one
// column per (ky, kx, channel) tap.
void im2col(const float* in, int count, int h, int w, const LayerSpec& layer, int oh, int ow,
            std::vector<float>& col) {
  const int c = layer.in_channels, k = layer.kernel, p = pad_before(layer);
  col.resize(static_cast<std::size_t>(count) * oh * ow * k * k * c);
  float* out = col.data();
  for (int b = 0; b < count; ++b) {
    const float* img = in + static_cast<std::size_t>(b) * h * w * c;
    for (int y = 0; y < oh; ++y) {
      for (int xo = 0; xo < ow; ++xo) {
        for (int ky = 0; ky < k; ++ky) {
          const int iy = y + ky - p;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = xo + kx - p;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
              for (int ch = 0; ch < c; ++ch) out[ch] = 0.0f;
            } else {
              const float* src = img + (static_cast<std::size_t>(iy) * w + ix) * c;
              for (int ch = 0; ch < c; ++ch) out[ch] = src[ch];
            }
            out += c;
          }
        }
      }
    }
  }
}

void col2im_add(const float* dcol, int count, int h, int w, const LayerSpec& layer, int oh, int ow,
                float* dx) {
  const int c = layer.in_channels, k = layer.kernel, p = pad_before(layer);
  const float* src = dcol;
  for (int b = 0; b < count; ++b) {
    float* img = dx + static_cast<std::size_t>(b) * h * w * c;
    for (int y = 0; y < oh; ++y) {
      for (int xo = 0; xo < ow; ++xo) {
        for (int ky = 0; ky < k; ++ky) {
          const int iy = y + ky - p;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = xo + kx - p;
            if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
              float* dst = img + (static_cast<std::size_t>(iy) * w + ix) * c;
              for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
            }
            src += c;
          }
        }
      }
    }
  }
}

std::vector<float>& scratch_columns() {
  thread_local std::vector<float> buffer;
  return buffer;
}

// Few taps make im2col + GEMM overhead-bound; these loops vectorize over
// output channels instead.
constexpr int direct_conv_max_taps = 32;

inline void axpy(float a, const float* __restrict x, float* __restrict y, int n) {
  if (n == 32) {
    for (int j = 0; j < 32; ++j) y[j] += a * x[j];
    return;
  }
  for (int j = 0; j < n; ++j) y[j] += a * x[j];
}


template <int CO>
void conv_direct_forward_fixed(const LayerSpec& layer, const Tensor& x, Tensor& y) {
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = layer.in_channels;
  const int oh = y.dim(1), ow = y.dim(2);
  const int k = layer.kernel, p = pad_before(layer);
  const float* wt = layer.weight.raw();
  for (int b = 0; b < n; ++b) {
    const float* img = x.raw() + static_cast<std::size_t>(b) * h * w * c;
    for (int yy = 0; yy < oh; ++yy) {
      for (int xx = 0; xx < ow; ++xx) {
        float acc[CO];
        for (int j = 0; j < CO; ++j) acc[j] = layer.bias.raw()[j];
        for (int ky = 0; ky < k; ++ky) {
          const int iy = yy + ky - p;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = xx + kx - p;
            if (ix < 0 || ix >= w) continue;
            const float* src = img + (static_cast<std::size_t>(iy) * w + ix) * c;
            const float* wrow = wt + static_cast<std::size_t>((ky * k + kx) * c) * CO;
            for (int ci = 0; ci < c; ++ci, wrow += CO) {
              const float v = src[ci];
              for (int j = 0; j < CO; ++j) acc[j] += v * wrow[j];
            }
          }
        }
        float* o = y.raw() + ((static_cast<std::size_t>(b) * oh + yy) * ow + xx) * CO;
        for (int j = 0; j < CO; ++j) o[j] = acc[j];
      }
    }
  }
}

void conv_direct_forward(const LayerSpec& layer, const Tensor& x, Tensor& y) {
  switch (layer.out_channels) {
    case 1: return conv_direct_forward_fixed<1>(layer, x, y);
    case 8: return conv_direct_forward_fixed<8>(layer, x, y);
    case 16: return conv_direct_forward_fixed<16>(layer, x, y);
    case 32: return conv_direct_forward_fixed<32>(layer, x, y);
    case 64: return conv_direct_forward_fixed<64>(layer, x, y);
    default: break;
  }
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = layer.in_channels;
  const int oh = y.dim(1), ow = y.dim(2), co = layer.out_channels;
  const int k = layer.kernel, p = pad_before(layer);
  const float* wt = layer.weight.raw();
  for (int b = 0; b < n; ++b) {
    const float* img = x.raw() + static_cast<std::size_t>(b) * h * w * c;
    for (int yy = 0; yy < oh; ++yy) {
      for (int xx = 0; xx < ow; ++xx) {
        float* __restrict o = y.raw() + ((static_cast<std::size_t>(b) * oh + yy) * ow + xx) * co;
        for (int j = 0; j < co; ++j) o[j] = layer.bias.raw()[j];
        for (int ky = 0; ky < k; ++ky) {
          const int iy = yy + ky - p;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = xx + kx - p;
            if (ix < 0 || ix >= w) continue;
            const float* src = img + (static_cast<std::size_t>(iy) * w + ix) * c;
            const float* wrow = wt + static_cast<std::size_t>((ky * k + kx) * c) * co;
            for (int ci = 0; ci < c; ++ci, wrow += co) axpy(src[ci], wrow, o, co);
          }
        }
      }
    }
  }
}

void conv_direct_backward(const LayerSpec& layer, const Tensor& x, const Tensor& g, Tensor* dw,
                          Tensor* db) {
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = layer.in_channels;
  const int oh = g.dim(1), ow = g.dim(2), co = layer.out_channels;
  const int k = layer.kernel, p = pad_before(layer);
  for (int b = 0; b < n; ++b) {
    const float* img = x.raw() + static_cast<std::size_t>(b) * h * w * c;
    for (int yy = 0; yy < oh; ++yy) {
      for (int xx = 0; xx < ow; ++xx) {
        const float* go = g.raw() + ((static_cast<std::size_t>(b) * oh + yy) * ow + xx) * co;
        axpy(1.0f, go, db->raw(), co);
        for (int ky = 0; ky < k; ++ky) {
          const int iy = yy + ky - p;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = xx + kx - p;
            if (ix < 0 || ix >= w) continue;
            const std::size_t pix = (static_cast<std::size_t>(iy) * w + ix) * c;
            const std::size_t tap = static_cast<std::size_t>((ky * k + kx) * c) * co;
            for (int ci = 0; ci < c; ++ci) {
              const std::size_t row = tap + static_cast<std::size_t>(ci) * co;
              axpy(img[pix + ci], go, dw->raw() + row, co);
            }
          }
        }
      }
    }
  }
}

Tensor conv_forward(const LayerSpec& layer, const Tensor& x) {
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = conv_out_extent(layer, h);
  const int ow = conv_out_extent(layer, w);
  const int taps = layer.kernel * layer.kernel * layer.in_channels;
  const int chunk = conv_chunk(layer, oh, ow);
  Tensor y({n, oh, ow, layer.out_channels});
  if (taps <= direct_conv_max_taps) {
    conv_direct_forward(layer, x, y);
    return y;
  }
  ConstMatrixMap wm(layer.weight.raw(), taps, layer.out_channels);
  const ConstRowVectorMap bias(layer.bias.raw(), layer.out_channels);
  auto& col = scratch_columns();
  for (int b = 0; b < n; b += chunk) {
    const int count = std::min(chunk, n - b);
    im2col(x.raw() + static_cast<std::size_t>(b) * h * w * layer.in_channels, count, h, w, layer,
           oh, ow, col);
    const int rows = count * oh * ow;
    ConstMatrixMap cm(col.data(), rows, taps);
    MatrixMap ym(y.raw() + static_cast<std::size_t>(b) * oh * ow * layer.out_channels, rows,
                 layer.out_channels);
    ym.noalias() = cm * wm;
    ym.rowwise() += bias;
  }
  return y;
}

// Accumulates weight/bias gradients (when dw != nullptr) and returns the input
// gradient (when need_input).
Tensor conv_backward(const LayerSpec& layer, const Tensor& x, const Tensor& g, Tensor* dw,
                     Tensor* db, bool need_input) {
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = g.dim(1), ow = g.dim(2);
  const int taps = layer.kernel * layer.kernel * layer.in_channels;
  const int chunk = conv_chunk(layer, oh, ow);
  ConstMatrixMap wm(layer.weight.raw(), taps, layer.out_channels);
  Tensor dx;
  if (need_input) dx = Tensor(x.shape());
  if (taps <= direct_conv_max_taps && dw) {
    conv_direct_backward(layer, x, g, dw, db);
    dw = nullptr;
    db = nullptr;
    if (!need_input) return dx;
  }
  auto& col = scratch_columns();
  RowMatrix dcol;
  for (int b = 0; b < n; b += chunk) {
    const int count = std::min(chunk, n - b);
    const int rows = count * oh * ow;
    ConstMatrixMap gm(g.raw() + static_cast<std::size_t>(b) * oh * ow * layer.out_channels, rows,
                      layer.out_channels);
    if (dw) {
      im2col(x.raw() + static_cast<std::size_t>(b) * h * w * layer.in_channels, count, h, w,
             layer, oh, ow, col);
      ConstMatrixMap cm(col.data(), rows, taps);
      MatrixMap(dw->raw(), taps, layer.out_channels).noalias() += cm.transpose() * gm;
      Eigen::Map<RowVector>(db->raw(), layer.out_channels) += gm.colwise().sum();
    }
    if (need_input) {
      dcol.noalias() = gm * wm.transpose();
      col2im_add(dcol.data(), count, h, w, layer, oh, ow,
                 dx.raw() + static_cast<std::size_t>(b) * h * w * layer.in_channels);
    }
  }
  return dx;
}

Tensor dense_forward(const LayerSpec& layer, const Tensor& x) {
  const int n = x.dim(0);
  Tensor y({n, layer.out_features});
  ConstMatrixMap xm(x.raw(), n, layer.in_features);
  ConstMatrixMap wm(layer.weight.raw(), layer.in_features, layer.out_features);
  MatrixMap ym(y.raw(), n, layer.out_features);
  ym.noalias() = xm * wm;
  ym.rowwise() += ConstRowVectorMap(layer.bias.raw(), layer.out_features);
  return y;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (float& v : y.data()) v = v > 0.0f ? v : 0.0f;
  return y;
}

Tensor maxpool_forward(const Tensor& x, std::vector<std::uint32_t>* argmax) {
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const int oh = h / 2, ow = w / 2;
  Tensor y({n, oh, ow, c});
  if (argmax) argmax->assign(y.size(), 0);
  const float* in = x.raw();
  std::size_t o = 0;
  for (int b = 0; b < n; ++b) {
    for (int yy = 0; yy < oh; ++yy) {
      for (int xx = 0; xx < ow; ++xx) {
        for (int ch = 0; ch < c; ++ch, ++o) {
          std::size_t best = ((static_cast<std::size_t>(b) * h + 2 * yy) * w + 2 * xx) * c + ch;
          float best_v = in[best];
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx =
                  ((static_cast<std::size_t>(b) * h + 2 * yy + dy) * w + 2 * xx + dx) * c + ch;
              if (in[idx] > best_v) {
                best_v = in[idx];
                best = idx;
              }
            }
          }
          y[o] = best_v;
          if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return y;
}

}  // namespace

const char* layer_kind_name(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2x2: return "maxpool2x2";
    case LayerKind::dense: return "dense";
    case LayerKind::flatten: return "flatten";
  }
  return "unknown";
}

LayerSpec conv2d(int kernel, int in_channels, int out_channels, Padding padding) {
  require(kernel > 0 && in_channels > 0 && out_channels > 0, ErrorCode::invalid_argument,
          "conv2d dimensions must be positive");
  LayerSpec l;
  l.kind = LayerKind::conv2d;
  l.kernel = kernel;
  l.padding = padding;
  l.in_channels = in_channels;
  l.out_channels = out_channels;
  l.weight = Tensor({kernel, kernel, in_channels, out_channels});
  l.bias = Tensor({out_channels});
  return l;
}

LayerSpec dense(int in_features, int out_features) {
  require(in_features > 0 && out_features > 0, ErrorCode::invalid_argument,
          "dense dimensions must be positive");
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.in_features = in_features;
  l.out_features = out_features;
  l.weight = Tensor({in_features, out_features});
  l.bias = Tensor({out_features});
  return l;
}

LayerSpec relu() { return LayerSpec{.kind = LayerKind::relu}; }
LayerSpec maxpool2x2() { return LayerSpec{.kind = LayerKind::maxpool2x2}; }
LayerSpec flatten() { return LayerSpec{.kind = LayerKind::flatten}; }

Network::Network(Shape input_shape, std::vector<LayerSpec> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  require(!layers_.empty(), ErrorCode::invalid_argument, "network needs at least one layer");
  element_count(input_shape_);
  shapes_.push_back(input_shape_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.kind == LayerKind::conv2d) {
      require(l.weight.shape() == Shape{l.kernel, l.kernel, l.in_channels, l.out_channels} &&
                  l.bias.shape() == Shape{l.out_channels},
              ErrorCode::shape_mismatch, layer_label(i, l) + " has inconsistent parameters");
    } else if (l.kind == LayerKind::dense) {
      require(l.weight.shape() == Shape{l.in_features, l.out_features} &&
                  l.bias.shape() == Shape{l.out_features},
              ErrorCode::shape_mismatch, layer_label(i, l) + " has inconsistent parameters");
    }
    shapes_.push_back(output_shape_of(i, l, shapes_.back()));
  }
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    if (!l.has_parameters()) continue;
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> Network::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_) {
    if (!l.has_parameters()) continue;
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* p : parameters()) n += p->size();
  return n;
}

void Network::init_parameters(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 0.1f);
  for (auto& l : layers_) {
    if (!l.has_parameters()) continue;
    for (float& w : l.weight.data()) {
      float v;
      do {
        v = normal(rng);
      } while (v < -0.2f || v > 0.2f);
      w = v;
    }
    l.bias.fill(0.1f);
  }
}

Tensor forward(const Network& net, const Tensor& batch, ForwardCache* cache) {
  const auto& layers = net.layers();
  const Shape& expected = net.input_shape();
  const bool ok = batch.rank() == static_cast<int>(expected.size()) + 1 && batch.dim(0) > 0 &&
                  std::equal(expected.begin(), expected.end(), batch.shape().begin() + 1);
  require(ok, ErrorCode::shape_mismatch,
          layer_label(0, layers[0]) + " expects batch of " + shape_string(expected) +
              " samples, got " + shape_string(batch.shape()));

  if (cache) {
    cache->valid = false;
    cache->inputs.assign(layers.size(), Tensor());
    cache->argmax.assign(layers.size(), {});
  }

  Tensor current;
  const Tensor* in = &batch;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    Tensor out;
    switch (l.kind) {
      case LayerKind::conv2d:
        out = conv_forward(l, *in);
        break;
      case LayerKind::dense:
        out = dense_forward(l, *in);
        break;
      case LayerKind::relu:
        out = relu_forward(*in);
        break;
      case LayerKind::maxpool2x2:
        out = maxpool_forward(*in, cache ? &cache->argmax[i] : nullptr);
        break;
      case LayerKind::flatten:
        out = *in;
        out.reshape(batched(static_cast<std::size_t>(in->dim(0)), net.shape_before(i + 1)));
        break;
    }
    if (cache) cache->inputs[i] = (i == 0) ? batch : std::move(current);
    current = std::move(out);
    in = &current;
  }
  if (cache) cache->valid = true;
  return current;
}

Gradients backward(const Network& net, const ForwardCache& cache, const Tensor& output_grad,
                   BackwardOptions options) {
  require(cache.valid, ErrorCode::bad_state, "backward called without a matching forward pass");
  const auto& layers = net.layers();
  require(cache.inputs.size() == layers.size(), ErrorCode::bad_state,
          "forward cache belongs to a different network");
  const int n = cache.inputs[0].dim(0);
  require(output_grad.shape() == batched(static_cast<std::size_t>(n), net.output_shape()),
          ErrorCode::shape_mismatch,
          "output gradient shape " + shape_string(output_grad.shape()) + " does not match " +
              shape_string(batched(static_cast<std::size_t>(n), net.output_shape())));

  Gradients grads;
  std::vector<std::size_t> param_index(layers.size(), 0);
  {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      param_index[i] = idx;
      if (layers[i].has_parameters()) {
        if (options.parameters) {
          grads.parameters.emplace_back(layers[i].weight.shape());
          grads.parameters.emplace_back(layers[i].bias.shape());
        }
        idx += 2;
      }
    }
  }

  Tensor g = output_grad;
  for (std::size_t ii = layers.size(); ii-- > 0;) {
    const auto& l = layers[ii];
    const Tensor& x = cache.inputs[ii];
    const bool need_input = ii > 0 || options.input;
    switch (l.kind) {
      case LayerKind::conv2d: {
        Tensor* dw = options.parameters ? &grads.parameters[param_index[ii]] : nullptr;
        Tensor* db = options.parameters ? &grads.parameters[param_index[ii] + 1] : nullptr;
        Tensor dx = conv_backward(l, x, g, dw, db, need_input);
        if (need_input) g = std::move(dx);
        break;
      }
      case LayerKind::dense: {
        ConstMatrixMap xm(x.raw(), n, l.in_features);
        ConstMatrixMap gm(g.raw(), n, l.out_features);
        if (options.parameters) {
          auto& dw = grads.parameters[param_index[ii]];
          auto& db = grads.parameters[param_index[ii] + 1];
          MatrixMap(dw.raw(), l.in_features, l.out_features).noalias() = xm.transpose() * gm;
          Eigen::Map<RowVector>(db.raw(), l.out_features) = gm.colwise().sum();
        }
        if (need_input) {
          ConstMatrixMap wm(l.weight.raw(), l.in_features, l.out_features);
          Tensor dx({n, l.in_features});
          MatrixMap(dx.raw(), n, l.in_features).noalias() = gm * wm.transpose();
          g = std::move(dx);
        }
        break;
      }
      case LayerKind::relu: {
        // Subgradient at exactly zero is zero.
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (!(x[i] > 0.0f)) g[i] = 0.0f;
        }
        break;
      }
      case LayerKind::maxpool2x2: {
        if (!need_input) break;
        Tensor dx(x.shape());
        const auto& winners = cache.argmax[ii];
        for (std::size_t o = 0; o < winners.size(); ++o) dx[winners[o]] += g[o];
        g = std::move(dx);
        break;
      }
      case LayerKind::flatten:
        g.reshape(x.shape());
        break;
    }
  }
  if (options.input) grads.input = std::move(g);
  return grads;
}

}  // namespace hawkeye::nd
