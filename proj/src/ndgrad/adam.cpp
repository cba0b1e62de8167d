#include "ndgrad/adam.hpp"

#include <cmath>

#include "common/error.hpp"

namespace hawkeye::nd {

AdamState::AdamState(std::span<const Tensor* const> params, AdamConfig config)
    : config_(config) {
  require(config.learning_rate > 0.0f, ErrorCode::invalid_argument,
          "learning rate must be positive");
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor* p : params) {
    m_.emplace_back(p->shape());
    v_.emplace_back(p->shape());
  }
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state) {
  require(params.size() == grads.size() && params.size() == state.m_.size(),
          ErrorCode::shape_mismatch,
          "adam_step: " + std::to_string(params.size()) + " params, " +
              std::to_string(grads.size()) + " grads, " + std::to_string(state.m_.size()) +
              " moments");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i]->shape() == grads[i].shape() && params[i]->shape() == state.m_[i].shape(),
            ErrorCode::shape_mismatch,
            "adam_step: parameter " + std::to_string(i) + " shape " +
                shape_string(params[i]->shape()) + " vs gradient " +
                shape_string(grads[i].shape()));
  }

  const auto& c = state.config_;
  state.steps_ += 1;
  const double t = static_cast<double>(state.steps_);
  const float bc1 = static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta1), t));
  const float bc2 = static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta2), t));

  for (std::size_t i = 0; i < params.size(); ++i) {
    float* p = params[i]->raw();
    const float* g = grads[i].raw();
    float* m = state.m_[i].raw();
    float* v = state.v_[i].raw();
    const std::size_t n = params[i]->size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = c.beta1 * m[j] + (1.0f - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0f - c.beta2) * g[j] * g[j];
      const float m_hat = m[j] / bc1;
      const float v_hat = v[j] / bc2;
      p[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace hawkeye::nd
