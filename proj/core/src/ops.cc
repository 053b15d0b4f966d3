// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace cra::ad {

namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw std::invalid_argument("operation on an empty Var");
  return *a.tape();
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError(op, b.shape_string(), a.shape_string());
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  auto in = a.values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = f(in[i]);
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul", bv.shape_string(), shape_string(av.cols(), bv.cols()));
  }
  return tape_of(a).record(OpKind::kMatMul, gemm(av, false, bv, false), {a, b},
                           [](BackwardContext& ctx) {
                             const Matrix& g = ctx.grad_out();
                             if (ctx.needs_grad(0)) {
                               gemm_accumulate(g, false, ctx.input(1), true, ctx.grad_in(0));
                             }
                             if (ctx.needs_grad(1)) {
                               gemm_accumulate(ctx.input(0), true, g, false, ctx.grad_in(1));
                             }
                           });
}

Var add(const Var& a, const Var& b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const bool broadcast = !av.same_shape(bv) && bv.rows() == 1 && bv.cols() == av.cols();
  if (!broadcast) require_same_shape("add", av, bv);
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    auto brow = bv.row(broadcast ? 0 : r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += brow[c];
  }
  return tape_of(a).record(OpKind::kAdd, std::move(out), {a, b},
                           [broadcast](BackwardContext& ctx) {
                             const Matrix& g = ctx.grad_out();
                             if (ctx.needs_grad(0)) ctx.grad_in(0) += g;
                             if (!ctx.needs_grad(1)) return;
                             Matrix& gb = ctx.grad_in(1);
                             if (!broadcast) {
                               gb += g;
                               return;
                             }
                             for (std::size_t r = 0; r < g.rows(); ++r) {
                               auto grow = g.row(r);
                               for (std::size_t c = 0; c < grow.size(); ++c) gb(0, c) += grow[c];
                             }
                           });
}

Var sub(const Var& a, const Var& b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape("sub", av, bv);
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] -= bv.values()[i];
  return tape_of(a).record(OpKind::kSub, std::move(out), {a, b}, [](BackwardContext& ctx) {
    const Matrix& g = ctx.grad_out();
    if (ctx.needs_grad(0)) ctx.grad_in(0) += g;
    if (ctx.needs_grad(1)) {
      Matrix& gb = ctx.grad_in(1);
      for (std::size_t i = 0; i < g.size(); ++i) gb.values()[i] -= g.values()[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape("mul", av, bv);
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= bv.values()[i];
  return tape_of(a).record(OpKind::kMul, std::move(out), {a, b}, [](BackwardContext& ctx) {
    const Matrix& g = ctx.grad_out();
    const Matrix& x = ctx.input(0);
    const Matrix& y = ctx.input(1);
    if (ctx.needs_grad(0)) {
      Matrix& ga = ctx.grad_in(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga.values()[i] += g.values()[i] * y.values()[i];
    }
    if (ctx.needs_grad(1)) {
      Matrix& gb = ctx.grad_in(1);
      for (std::size_t i = 0; i < g.size(); ++i) gb.values()[i] += g.values()[i] * x.values()[i];
    }
  });
}

Var concat_rows(const Var& a, const Var& b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw ShapeError("concat_rows", bv.shape_string(), shape_string(bv.rows(), av.cols()));
  }
  std::vector<double> vals(av.values().begin(), av.values().end());
  vals.insert(vals.end(), bv.values().begin(), bv.values().end());
  const std::size_t split = av.size();
  return tape_of(a).record(
      OpKind::kConcatRows, Matrix(av.rows() + bv.rows(), av.cols(), std::move(vals)), {a, b},
      [split](BackwardContext& ctx) {
        auto g = ctx.grad_out().values();
        if (ctx.needs_grad(0)) {
          auto ga = ctx.grad_in(0).values();
          for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
        }
        if (ctx.needs_grad(1)) {
          auto gb = ctx.grad_in(1).values();
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[split + i];
        }
      });
}

Var concat_cols(const Var& a, const Var& b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw ShapeError("concat_cols", bv.shape_string(), shape_string(av.rows(), bv.cols()));
  }
  const std::size_t ca = av.cols();
  const std::size_t cb = bv.cols();
  Matrix out(av.rows(), ca + cb);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy(av.row(r).begin(), av.row(r).end(), out.row(r).begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), out.row(r).begin() + ca);
  }
  return tape_of(a).record(OpKind::kConcatCols, std::move(out), {a, b},
                           [ca, cb](BackwardContext& ctx) {
                             const Matrix& g = ctx.grad_out();
                             for (std::size_t r = 0; r < g.rows(); ++r) {
                               auto grow = g.row(r);
                               if (ctx.needs_grad(0)) {
                                 auto ga = ctx.grad_in(0).row(r);
                                 for (std::size_t c = 0; c < ca; ++c) ga[c] += grow[c];
                               }
                               if (ctx.needs_grad(1)) {
                                 auto gb = ctx.grad_in(1).row(r);
                                 for (std::size_t c = 0; c < cb; ++c) gb[c] += grow[ca + c];
                               }
                             }
                           });
}

Var slice_rows(const Var& a, std::size_t from, std::size_t to) {
  const Matrix& av = a.value();
  if (from > to || to > av.rows()) {
    throw ShapeError("slice_rows", "rows [" + std::to_string(from) + ", " + std::to_string(to) + ")",
                     "range within " + std::to_string(av.rows()) + " rows");
  }
  const std::size_t cols = av.cols();
  std::vector<double> vals(av.values().begin() + from * cols, av.values().begin() + to * cols);
  return tape_of(a).record(OpKind::kSliceRows, Matrix(to - from, cols, std::move(vals)), {a},
                           [from, cols](BackwardContext& ctx) {
                             auto g = ctx.grad_out().values();
                             auto ga = ctx.grad_in(0).values();
                             for (std::size_t i = 0; i < g.size(); ++i) ga[from * cols + i] += g[i];
                           });
}

Var slice_cols(const Var& a, std::size_t from, std::size_t to) {
  const Matrix& av = a.value();
  if (from > to || to > av.cols()) {
    throw ShapeError("slice_cols", "cols [" + std::to_string(from) + ", " + std::to_string(to) + ")",
                     "range within " + std::to_string(av.cols()) + " cols");
  }
  const std::size_t width = to - from;
  Matrix out(av.rows(), width);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy_n(av.row(r).begin() + from, width, out.row(r).begin());
  }
  return tape_of(a).record(OpKind::kSliceCols, std::move(out), {a},
                           [from, width](BackwardContext& ctx) {
                             const Matrix& g = ctx.grad_out();
                             Matrix& ga = ctx.grad_in(0);
                             for (std::size_t r = 0; r < g.rows(); ++r) {
                               for (std::size_t c = 0; c < width; ++c) ga(r, from + c) += g(r, c);
                             }
                           });
}

Var repeat_rows(const Var& row, std::size_t n) {
  const Matrix& v = row.value();
  if (v.rows() != 1) throw ShapeError("repeat_rows", v.shape_string(), shape_string(1, v.cols()));
  Matrix out(n, v.cols());
  for (std::size_t r = 0; r < n; ++r) std::copy(v.values().begin(), v.values().end(), out.row(r).begin());
  return tape_of(row).record(OpKind::kRepeatRows, std::move(out), {row}, [](BackwardContext& ctx) {
    const Matrix& g = ctx.grad_out();
    auto gr = ctx.grad_in(0).row(0);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < gr.size(); ++c) gr[c] += g(r, c);
    }
  });
}

Var relu(const Var& a) {
  return tape_of(a).record(OpKind::kRelu, map(a.value(), [](double x) { return x > 0 ? x : 0.0; }),
                           {a}, [](BackwardContext& ctx) {
                             auto g = ctx.grad_out().values();
                             auto x = ctx.input(0).values();
                             auto ga = ctx.grad_in(0).values();
                             for (std::size_t i = 0; i < g.size(); ++i) {
                               if (x[i] > 0) ga[i] += g[i];
                             }
                           });
}

Var tanh(const Var& a) {
  return tape_of(a).record(OpKind::kTanh, map(a.value(), [](double x) { return std::tanh(x); }), {a},
                           [](BackwardContext& ctx) {
                             auto g = ctx.grad_out().values();
                             auto y = ctx.value_out().values();
                             auto ga = ctx.grad_in(0).values();
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
                           });
}

Var softmax_rows(const Var& a) {
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    auto in = av.row(r);
    auto o = out.row(r);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - mx);
      total += o[c];
    }
    for (auto& v : o) v /= total;
  }
  return tape_of(a).record(OpKind::kSoftmaxRows, std::move(out), {a}, [](BackwardContext& ctx) {
    const Matrix& g = ctx.grad_out();
    const Matrix& y = ctx.value_out();
    Matrix& ga = ctx.grad_in(0);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto gr = g.row(r);
      auto yr = y.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < gr.size(); ++c) dot += gr[c] * yr[c];
      auto out = ga.row(r);
      for (std::size_t c = 0; c < gr.size(); ++c) out[c] += yr[c] * (gr[c] - dot);
    }
  });
}

Var sigmoid(const Var& a) {
  return tape_of(a).record(OpKind::kSigmoid, map(a.value(), stable_sigmoid), {a},
                           [](BackwardContext& ctx) {
                             auto g = ctx.grad_out().values();
                             auto y = ctx.value_out().values();
                             auto ga = ctx.grad_in(0).values();
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
                           });
}

Var scale(const Var& a, double c) {
  return tape_of(a).record(OpKind::kScale, map(a.value(), [c](double x) { return c * x; }), {a},
                           [c](BackwardContext& ctx) {
                             auto g = ctx.grad_out().values();
                             auto ga = ctx.grad_in(0).values();
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
                           });
}

Var transpose(const Var& a) {
  return tape_of(a).record(OpKind::kTranspose, transposed(a.value()), {a}, [](BackwardContext& ctx) {
    const Matrix& g = ctx.grad_out();
    Matrix& ga = ctx.grad_in(0);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) ga(c, r) += g(r, c);
    }
  });
}

Var mean_rows_masked(const Var& a, std::span<const unsigned char> mask) {
  const Matrix& av = a.value();
  if (mask.size() != av.rows()) {
    throw ShapeError("mean_rows_masked", "mask of " + std::to_string(mask.size()),
                     std::to_string(av.rows()) + " entries");
  }
  std::vector<unsigned char> m(mask.begin(), mask.end());
  const auto count = static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](auto v) { return v != 0; }));
  if (count == 0) throw std::invalid_argument("mean_rows_masked: mask selects no rows");
  Matrix out(1, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    if (!m[r]) continue;
    auto row = av.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out(0, c) += row[c];
  }
  const double inv = 1.0 / static_cast<double>(count);
  out *= inv;
  return tape_of(a).record(OpKind::kMeanRowsMasked, std::move(out), {a},
                           [m = std::move(m), inv](BackwardContext& ctx) {
                             const Matrix& g = ctx.grad_out();
                             Matrix& ga = ctx.grad_in(0);
                             for (std::size_t r = 0; r < ga.rows(); ++r) {
                               if (!m[r]) continue;
                               for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += inv * g(0, c);
                             }
                           });
}

Var l2_normalize_rows(const Var& a, double norm_floor) {
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  std::vector<double> norms(av.rows());
  std::vector<unsigned char> floored(av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (double v : av.row(r)) s += v * v;
    const double n = std::sqrt(s);
    floored[r] = n <= norm_floor;
    norms[r] = floored[r] ? norm_floor : n;
    auto o = out.row(r);
    auto in = av.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = in[c] / norms[r];
  }
  return tape_of(a).record(
      OpKind::kL2NormalizeRows, std::move(out), {a},
      [norms = std::move(norms), floored = std::move(floored)](BackwardContext& ctx) {
        const Matrix& g = ctx.grad_out();
        const Matrix& y = ctx.value_out();
        Matrix& ga = ctx.grad_in(0);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto gr = g.row(r);
          auto yr = y.row(r);
          auto out = ga.row(r);
          double dot = 0.0;
          if (!floored[r]) {
            for (std::size_t c = 0; c < gr.size(); ++c) dot += gr[c] * yr[c];
          }
          for (std::size_t c = 0; c < gr.size(); ++c) out[c] += (gr[c] - yr[c] * dot) / norms[r];
        }
      });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return tape_of(a).record(OpKind::kSum, Matrix(1, 1, s), {a}, [](BackwardContext& ctx) {
    const double g = ctx.grad_out()(0, 0);
    for (auto& v : ctx.grad_in(0).values()) v += g;
  });
}

Var sparse_matmul(const CsrMatrix& s, const Var& a) {
  const Matrix& av = a.value();
  if (s.cols != av.rows()) {
    throw ShapeError("sparse_matmul", av.shape_string(), shape_string(s.cols, av.cols()));
  }
  Matrix out(s.rows, av.cols());
  for (std::size_t r = 0; r < s.rows; ++r) {
    auto o = out.row(r);
    for (std::size_t k = s.row_offsets[r]; k < s.row_offsets[r + 1]; ++k) {
      const double w = s.values[k];
      auto in = av.row(s.col_indices[k]);
      for (std::size_t c = 0; c < o.size(); ++c) o[c] += w * in[c];
    }
  }
  return tape_of(a).record(OpKind::kSparseMatMul, std::move(out), {a}, [s](BackwardContext& ctx) {
    const Matrix& g = ctx.grad_out();
    Matrix& ga = ctx.grad_in(0);
    for (std::size_t r = 0; r < s.rows; ++r) {
      auto gr = g.row(r);
      for (std::size_t k = s.row_offsets[r]; k < s.row_offsets[r + 1]; ++k) {
        const double w = s.values[k];
        auto out = ga.row(s.col_indices[k]);
        for (std::size_t c = 0; c < gr.size(); ++c) out[c] += w * gr[c];
      }
    }
  });
}

Var binary_cross_entropy(const Var& probs, std::span<const int> labels, double clamp) {
  const Matrix& p = probs.value();
  if (p.cols() != 1 || p.rows() != labels.size()) {
    throw ShapeError("binary_cross_entropy", p.shape_string(), shape_string(labels.size(), 1));
  }
  if (labels.empty()) throw std::invalid_argument("binary_cross_entropy: no labels");
  std::vector<int> y(labels.begin(), labels.end());
  const double n = static_cast<double>(y.size());
  double total = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j] != 1 && y[j] != -1) throw std::invalid_argument("binary_cross_entropy: label not in {-1, +1}");
    const double pj = std::clamp(p(j, 0), clamp, 1.0 - clamp);
    total += y[j] == 1 ? std::log(pj) : std::log1p(-pj);
  }
  return probs.tape()->record(
      OpKind::kBinaryCrossEntropy, Matrix(1, 1, -total / n), {probs},
      [y = std::move(y), n, clamp](BackwardContext& ctx) {
        const double g = ctx.grad_out()(0, 0);
        const Matrix& p = ctx.input(0);
        Matrix& gp = ctx.grad_in(0);
        for (std::size_t j = 0; j < y.size(); ++j) {
          const double pj = p(j, 0);
          if (pj < clamp || pj > 1.0 - clamp) continue;
          gp(j, 0) += g * (y[j] == 1 ? -1.0 / (n * pj) : 1.0 / (n * (1.0 - pj)));
        }
      });
}

}  // namespace cra::ad
