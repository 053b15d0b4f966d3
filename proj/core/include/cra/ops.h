// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_OPS_H_
#define CRA_OPS_H_

#include <cstddef>
#include <span>

#include "cra/matrix.h"
#include "cra/tape.h"

// Differentiable primitives. Every op records itself on the tape of its
// operands and throws ShapeError on incompatible shapes.
namespace cra::ad {

Var matmul(const Var& a, const Var& b);
// Elementwise a + b; b may also be a 1 x cols row broadcast over a's rows.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var concat_rows(const Var& a, const Var& b);
Var concat_cols(const Var& a, const Var& b);
Var slice_rows(const Var& a, std::size_t from, std::size_t to);
Var slice_cols(const Var& a, std::size_t from, std::size_t to);
// Tiles a 1 x cols row n times.
Var repeat_rows(const Var& row, std::size_t n);
Var relu(const Var& a);
Var tanh(const Var& a);
// Row-wise softmax; subtracts each row's max before exponentiating.
Var softmax_rows(const Var& a);
Var sigmoid(const Var& a);
Var scale(const Var& a, double c);
Var transpose(const Var& a);
// 1 x cols mean of the rows whose mask entry is non-zero.
Var mean_rows_masked(const Var& a, std::span<const unsigned char> mask);
// Rows divided by max(||row||, norm_floor).
Var l2_normalize_rows(const Var& a, double norm_floor = 1e-12);
Var sum(const Var& a);
// Constant sparse matrix times a.
Var sparse_matmul(const CsrMatrix& s, const Var& a);
// Mean negative log-likelihood of n x 1 probabilities p(y = +1) against
// labels in {-1, +1}. Probabilities are clamped to [clamp, 1 - clamp]; the
// clamp has zero derivative where active.
Var binary_cross_entropy(const Var& probs, std::span<const int> labels, double clamp = 1e-12);

}  // namespace cra::ad

#endif  // CRA_OPS_H_
