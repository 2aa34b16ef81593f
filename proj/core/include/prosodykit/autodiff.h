// Copyright (c) 2026 The ProsodyKit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROSODYKIT_AUTODIFF_H_
#define PROSODYKIT_AUTODIFF_H_

// Minimal tape-based reverse-mode differentiation over dense double
// matrices. Every op appends a node holding its value and a closure that
// pushes the node's gradient to its inputs.

#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "prosodykit/signal_types.h"

namespace prosodykit::ad {

struct Parameter {
  Matrix value;
  Matrix grad;
};

// Named trainable tensors. Iteration order is the lexicographic name order,
// which fixes the serialization and optimizer order.
class ParameterSet {
 public:
  Parameter& Add(const std::string& name, Matrix init);
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  bool Contains(const std::string& name) const;
  void ZeroGrad();
  size_t NumScalars() const;

  std::map<std::string, Parameter>& items() { return params_; }
  const std::map<std::string, Parameter>& items() const { return params_; }

 private:
  std::map<std::string, Parameter> params_;
};

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  // Gradient after Tape::Backward; empty if no gradient reached this node.
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // With grad_enabled == false no backward closures are recorded.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Matrix value);
  // Differentiable leaf that is not a Parameter (used for gradient checks).
  Var Leaf(Matrix value);
  // Each parameter maps to one node per tape; Backward adds the node's
  // gradient into Parameter::grad.
  Var Param(Parameter& param);

  void Backward(Var scalar);

  bool grad_enabled() const { return grad_enabled_; }
  size_t size() const { return nodes_.size(); }

  using BackwardFn = std::function<void(const Matrix& out_grad)>;
  Var Record(Matrix value, std::span<const Var> inputs, BackwardFn backward);
  void Accumulate(const Var& var, const Matrix& delta);
  template <typename Expr>
  void Accumulate(const Var& var, const Expr& delta) {
    Node& n = nodes_[static_cast<size_t>(var.id())];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = delta;
    } else {
      n.grad.array() += delta.array();
    }
  }

 private:
  friend class Var;
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  bool grad_enabled_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// Elementwise and linear-algebra ops. Shapes follow Eigen conventions; row
// vectors are 1 x n matrices.
Var MatMul(Var a, Var b);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double s);
// a [r x c] + row [1 x c] broadcast over rows.
Var AddRow(Var a, Var row);
// x * w + b
Var Affine(Var x, Var w, Var b);
Var Tanh(Var a);
Var Sigmoid(Var a);
Var Relu(Var a);
Var Log(Var a);
Var Square(Var a);
Var Transpose(Var a);
Var ConcatCols(std::span<const Var> parts);
Var ConcatRows(std::span<const Var> parts);
Var SliceCols(Var a, Eigen::Index start, Eigen::Index count);
Var SliceRows(Var a, Eigen::Index start, Eigen::Index count);
Var SumAll(Var a);
Var MeanAll(Var a);
// Column means, [1 x c].
Var MeanRows(Var a);
// Row-wise softmax. Entries with mask == false get probability exactly 0.
Var SoftmaxRows(Var a, const std::vector<bool>* mask = nullptr);
// Rows of `table` selected by ids.
Var Gather(Var table, std::span<const int> ids);
// Same-padded 1-D convolution over rows (time). x [T x Cin],
// weight [(kernel * Cin) x Cout], bias [1 x Cout].
Var Conv1d(Var x, Var weight, Var bias, int kernel);
Var Conv1dNoBias(Var x, Var weight, int kernel);
// Identity forward; multiplies the incoming gradient by -1.
Var GradientReversal(Var a);
// LSTM pointwise stage. gates [1 x 4H] ordered (input, forget, cell,
// output); c_prev [1 x H]. Returns [1 x 2H] = [h | c].
Var LstmCell(Var gates, Var c_prev);

// sqrt(mean((pred - target)^2)); the backward pass uses a 1e-12 floor on
// the root.
Var RmseLoss(Var pred, const Matrix& target);
// Mean binary cross entropy with probabilities clamped to [eps, 1 - eps].
Var BceLoss(Var prob, const Matrix& target, double eps);
// -log softmax(logits)[target] for a [1 x n] logit row.
Var CrossEntropyLoss(Var logits, int target);

}  // namespace prosodykit::ad

#endif  // PROSODYKIT_AUTODIFF_H_
