// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_ADAM_H_
#define CRA_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "cra/matrix.h"

namespace cra::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;
};

// Bias-corrected Adam, applied in place:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
//   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
// The state is lazily shaped on the first call.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& config);

// Rescales grads so that their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(std::span<Matrix> grads, double max_norm);

}  // namespace cra::ad

#endif  // CRA_ADAM_H_
