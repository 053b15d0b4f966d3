// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.h"

#include <span>

#include "cra/ops.h"
#include "cra/tape.h"

namespace cra::testing {

using ad::Matrix;
using ad::Tape;
using ad::Var;

// Inputs are kept away from kinks (relu at 0, norm floor).
std::vector<PrimitiveCase> primitive_cases() {
  const Matrix a = random_matrix(3, 4, 1);
  const Matrix b = random_matrix(4, 2, 2);
  const Matrix c = random_matrix(3, 4, 3);
  const Matrix row = random_matrix(1, 4, 4);
  Matrix away = random_matrix(3, 4, 5);
  for (double& v : away.values()) v += v >= 0 ? 0.2 : -0.2;
  Matrix probs(4, 1);
  probs.values()[0] = 0.2;
  probs.values()[1] = 0.7;
  probs.values()[2] = 0.45;
  probs.values()[3] = 0.9;
  static const std::vector<int> labels{1, -1, 1, -1};
  static const std::vector<unsigned char> mask{1, 0, 1};
  ad::CsrMatrix s;
  s.rows = 2;
  s.cols = 3;
  s.row_offsets = {0, 2, 3};
  s.col_indices = {0, 2, 1};
  s.values = {1.5, -0.5, 2.0};

  using V = std::span<const Var>;
  using namespace ad;
  return {
      {"matmul", [](Tape&, V x) { return matmul(x[0], x[1]); }, {a, b}},
      {"add", [](Tape&, V x) { return add(x[0], x[1]); }, {a, c}},
      {"add_broadcast", [](Tape&, V x) { return add(x[0], x[1]); }, {a, row}},
      {"sub", [](Tape&, V x) { return sub(x[0], x[1]); }, {a, c}},
      {"mul", [](Tape&, V x) { return mul(x[0], x[1]); }, {a, c}},
      {"concat_rows", [](Tape&, V x) { return concat_rows(x[0], x[1]); }, {a, row}},
      {"concat_cols", [](Tape&, V x) { return concat_cols(x[0], x[1]); }, {a, random_matrix(3, 2, 6)}},
      {"slice_rows", [](Tape&, V x) { return slice_rows(x[0], 1, 3); }, {a}},
      {"slice_cols", [](Tape&, V x) { return slice_cols(x[0], 1, 3); }, {a}},
      {"repeat_rows", [](Tape&, V x) { return repeat_rows(x[0], 3); }, {row}},
      {"relu", [](Tape&, V x) { return relu(x[0]); }, {away}},
      {"tanh", [](Tape&, V x) { return ad::tanh(x[0]); }, {a}},
      {"softmax_rows", [](Tape&, V x) { return softmax_rows(x[0]); }, {a}},
      {"sigmoid", [](Tape&, V x) { return sigmoid(x[0]); }, {a}},
      {"scale", [](Tape&, V x) { return scale(x[0], -0.7); }, {a}},
      {"transpose", [](Tape&, V x) { return transpose(x[0]); }, {a}},
      {"mean_rows_masked", [](Tape&, V x) { return mean_rows_masked(x[0], mask); }, {a}},
      {"l2_normalize_rows", [](Tape&, V x) { return l2_normalize_rows(x[0]); }, {a}},
      {"sum", [](Tape&, V x) { return sum(x[0]); }, {a}},
      {"sparse_matmul", [s](Tape&, V x) { return sparse_matmul(s, x[0]); }, {a}},
      {"binary_cross_entropy", [](Tape&, V x) { return binary_cross_entropy(x[0], labels); }, {probs}},
  };
}

std::size_t differentiable_op_kinds() {
  return static_cast<std::size_t>(ad::OpKind::kBinaryCrossEntropy) - static_cast<std::size_t>(ad::OpKind::kMatMul) + 1;
}

double brute_auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != -1) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

double brute_ap(const std::vector<double>& s, const std::vector<int>& y, const std::vector<std::string>& ids) {
  auto before = [&](std::size_t j, std::size_t i) {
    return s[j] > s[i] || (s[j] == s[i] && ids[j] < ids[i]);
  };
  double total = 0.0;
  int positives = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    ++positives;
    double rank = 1.0, hits = 1.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j == i || !before(j, i)) continue;
      rank += 1.0;
      hits += y[j] == 1;
    }
    total += hits / rank;
  }
  return total / positives;
}

}  // namespace cra::testing
