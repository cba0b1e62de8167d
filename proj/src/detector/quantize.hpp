#pragma once

#include <span>
#include <vector>

#include "classifier/classifier.hpp"

namespace hawkeye {

// Quantization step in raw pixel units, 1..255.
void check_step(int s);

// Raw pixel level of a normalized value: floor(v * 255), with a small guard
// so that stored k/255 values map back to k despite float rounding.
int raw_level(float v);

// s * floor(raw / s) / 255 for one pixel.
float quantize_value(float v, int s);
nd::Tensor quantize(const nd::Tensor& images, int s);

// Z = G(x) - G(q_s(x)) for every image, N x K.
nd::Tensor diff_vectors(const Classifier& model, const nd::Tensor& images, int s);
// Same from already computed logits of the images and of their references.
nd::Tensor diff_vectors(const nd::Tensor& logits, const nd::Tensor& reference_logits);

// L1 distance between softmax(G(x)) and softmax(G(q_s(x))) per image; the
// feature-squeezing score, in [0, 2].
std::vector<double> squeeze_scores(const nd::Tensor& logits, const nd::Tensor& reference_logits);
std::vector<double> squeeze_scores(const Classifier& model, const nd::Tensor& images, int s);

}  // namespace hawkeye
