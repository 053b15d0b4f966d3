// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_TESTS_GRADCHECK_H_
#define CRA_TESTS_GRADCHECK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cra/matrix.h"
#include "cra/tape.h"

namespace cra::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

// Builds a value from the leaves; it is reduced to a scalar by a fixed
// random weighting, so per-entry gradients are not symmetric.
using BuildFn = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

// Central differences on every entry of every input. The relative error of
// an entry is |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheck gradcheck(const BuildFn& build, const std::vector<ad::Matrix>& inputs,
                    double eps = 1e-5, double floor = 1e-4, std::uint64_t seed = 1);

// Same comparison for a scalar function whose analytic gradient is given.
using ScalarFn = std::function<double(const std::vector<ad::Matrix>&)>;
GradCheck gradcheck_scalar(const ScalarFn& f, const std::vector<ad::Matrix>& inputs,
                           const std::vector<ad::Matrix>& analytic, double eps = 1e-5,
                           double floor = 1e-4);

ad::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0);

}  // namespace cra::testing

#endif  // CRA_TESTS_GRADCHECK_H_
