// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/adam.h"

#include <cmath>
#include <stdexcept>

namespace cra::ad {

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& config) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step", std::to_string(grads.size()) + " gradients",
                     std::to_string(params.size()));
  }
  if (!(config.learning_rate >= 0.0)) throw std::invalid_argument("adam_step: negative learning rate");
  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.emplace_back(p->rows(), p->cols());
      state.second_moment.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step", std::to_string(params.size()) + " parameters",
                     std::to_string(state.first_moment.size()) + " moment buffers");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i])) {
      throw ShapeError("adam_step", grads[i].shape_string(), params[i]->shape_string());
    }
    if (!state.first_moment[i].same_shape(grads[i])) {
      throw ShapeError("adam_step", grads[i].shape_string(), state.first_moment[i].shape_string());
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    auto g = grads[i].values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

double clip_grad_norm(std::span<Matrix> grads, double max_norm) {
  double total = 0.0;
  for (const auto& g : grads) {
    for (double v : g.values()) total += v * v;
  }
  const double norm = std::sqrt(total);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads) g *= s;
  }
  return norm;
}

}  // namespace cra::ad
