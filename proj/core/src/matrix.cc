// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/matrix.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <utility>

namespace cra::ad {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) {
  return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

}  // namespace

ShapeError::ShapeError(std::string op, std::string got, std::string expected)
    : std::invalid_argument("shape mismatch in " + op + ": got " + got + ", expected " +
                            expected),
      op_(std::move(op)),
      got_(std::move(got)),
      expected_(std::move(expected)) {}

std::string shape_string(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Matrix", std::to_string(data_.size()) + " values",
                     std::to_string(rows * cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw ShapeError("Matrix", "ragged row of " + std::to_string(r.size()),
                       std::to_string(cols_) + " columns");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix::shape_string() const { return ad::shape_string(rows_, cols_); }

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix& Matrix::operator+=(const Matrix& o) {
  if (!same_shape(o)) throw ShapeError("+=", o.shape_string(), shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

void gemm_accumulate(const Matrix& a, bool transpose_a, const Matrix& b, bool transpose_b,
                     Matrix& c) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t ka = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (ka != kb) {
    throw ShapeError("matmul", shape_string(ka, n), shape_string(kb, n));
  }
  if (c.rows() != m || c.cols() != n) {
    throw ShapeError("matmul(out)", c.shape_string(), shape_string(m, n));
  }
  if (m == 0 || n == 0 || ka == 0) return;
  MutMap out(c.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  const auto av = view(a);
  const auto bv = view(b);
  if (!transpose_a && !transpose_b) {
    out.noalias() += av * bv;
  } else if (transpose_a && !transpose_b) {
    out.noalias() += av.transpose() * bv;
  } else if (!transpose_a && transpose_b) {
    out.noalias() += av * bv.transpose();
  } else {
    out.noalias() += av.transpose() * bv.transpose();
  }
}

Matrix gemm(const Matrix& a, bool transpose_a, const Matrix& b, bool transpose_b) {
  Matrix c(transpose_a ? a.cols() : a.rows(), transpose_b ? b.rows() : b.cols());
  gemm_accumulate(a, transpose_a, b, transpose_b, c);
  return c;
}

Matrix transposed(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  }
  return t;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff", b.shape_string(), a.shape_string());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  }
  return m;
}

}  // namespace cra::ad
