// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/tape.h"

#include <utility>

namespace cra::ad {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kConcatRows: return "concat_rows";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kSliceRows: return "slice_rows";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kRepeatRows: return "repeat_rows";
    case OpKind::kRelu: return "relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kScale: return "scale";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kMeanRowsMasked: return "mean_rows_masked";
    case OpKind::kL2NormalizeRows: return "l2_normalize_rows";
    case OpKind::kSum: return "sum";
    case OpKind::kSparseMatMul: return "sparse_matmul";
    case OpKind::kBinaryCrossEntropy: return "binary_cross_entropy";
  }
  return "unknown";
}

const Matrix& Var::value() const { return tape_->value(*this); }
const Matrix& Var::grad() const { return tape_->grad(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }

const Matrix& BackwardContext::grad_out() const { return tape_.nodes_[node_].grad; }
const Matrix& BackwardContext::value_out() const { return tape_.nodes_[node_].value; }

const Matrix& BackwardContext::input(std::size_t i) const {
  return tape_.nodes_[tape_.nodes_[node_].inputs.at(i)].value;
}

bool BackwardContext::needs_grad(std::size_t i) const {
  return tape_.nodes_[tape_.nodes_[node_].inputs.at(i)].requires_grad;
}

Matrix& BackwardContext::grad_in(std::size_t i) {
  return tape_.ensure_grad(tape_.nodes_[node_].inputs.at(i));
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.kind = OpKind::kLeaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(OpKind kind, Matrix value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.kind = kind;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (in.tape() != this) {
      throw std::invalid_argument(std::string(op_name(kind)) + ": operand from another tape");
    }
    n.inputs.push_back(in.id());
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  // Nodes that cannot reach a parameter need no reverse rule.
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::ensure_grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols() ||
      n.grad.size() != n.value.size()) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

const Matrix& Tape::grad(const Var& v) { return ensure_grad(v.id()); }

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: loss from another tape");
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw NotScalarError(lv.shape_string());
  for (auto& n : nodes_) n.grad = Matrix();
  ensure_grad(loss.id())(0, 0) = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    BackwardContext ctx(*this, i);
    n.backward(ctx);
  }
}

}  // namespace cra::ad
