// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_TAPE_H_
#define CRA_TAPE_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cra/matrix.h"

namespace cra::ad {

enum class OpKind {
  kLeaf,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kConcatRows,
  kConcatCols,
  kSliceRows,
  kSliceCols,
  kRepeatRows,
  kRelu,
  kTanh,
  kSoftmaxRows,
  kSigmoid,
  kScale,
  kTranspose,
  kMeanRowsMasked,
  kL2NormalizeRows,
  kSum,
  kSparseMatMul,
  kBinaryCrossEntropy,
};

const char* op_name(OpKind kind);

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives
// and has not been cleared.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  const Matrix& grad() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class NotScalarError : public std::invalid_argument {
 public:
  explicit NotScalarError(const std::string& shape)
      : std::invalid_argument("backward() needs a 1x1 loss, got " + shape) {}
};

// Access to one node's inputs and gradients during the reverse sweep.
class BackwardContext {
 public:
  const Matrix& grad_out() const;
  const Matrix& value_out() const;
  const Matrix& input(std::size_t i) const;
  bool needs_grad(std::size_t i) const;
  // Gradient buffer of input i, allocated as zeros on first use.
  Matrix& grad_in(std::size_t i);

 private:
  friend class Tape;
  BackwardContext(Tape& tape, std::size_t node) : tape_(tape), node_(node) {}
  Tape& tape_;
  std::size_t node_;
};

using BackwardFn = std::function<void(BackwardContext&)>;

// Linear record of operations in creation order (which is a topological
// order). backward() visits each node once, newest first, and sums
// gradient contributions across fan-out.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value, bool requires_grad);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  Var record(OpKind kind, Matrix value, std::vector<Var> inputs, BackwardFn backward);

  void backward(const Var& loss);

  const Matrix& value(const Var& v) const { return nodes_[v.id()].value; }
  // Zero matrix of matching shape if nothing reached the node.
  const Matrix& grad(const Var& v);
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  OpKind kind(const Var& v) const { return nodes_[v.id()].kind; }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  friend class BackwardContext;
  friend class Var;

  struct Node {
    OpKind kind = OpKind::kLeaf;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  Matrix& ensure_grad(std::size_t id);

  // A deque keeps value() references valid while the tape grows.
  std::deque<Node> nodes_;
};

}  // namespace cra::ad

#endif  // CRA_TAPE_H_
