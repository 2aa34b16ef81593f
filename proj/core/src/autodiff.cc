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

#include "prosodykit/autodiff.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "prosodykit/error.h"

namespace prosodykit::ad {

Parameter& ParameterSet::Add(const std::string& name, Matrix init) {
  auto [it, inserted] = params_.try_emplace(name);
  if (!inserted) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  }
  it->second.grad = Matrix::Zero(init.rows(), init.cols());
  it->second.value = std::move(init);
  return it->second;
}

Parameter& ParameterSet::Get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown parameter " + name);
  }
  return it->second;
}

const Parameter& ParameterSet::Get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown parameter " + name);
  }
  return it->second;
}

bool ParameterSet::Contains(const std::string& name) const {
  return params_.contains(name);
}

void ParameterSet::ZeroGrad() {
  for (auto& [name, p] : params_) p.grad.setZero();
}

size_t ParameterSet::NumScalars() const {
  size_t n = 0;
  for (const auto& [name, p] : params_) n += static_cast<size_t>(p.value.size());
  return n;
}

const Matrix& Var::value() const {
  return tape_->nodes_[static_cast<size_t>(id_)].value;
}

const Matrix& Var::grad() const {
  return tape_->nodes_[static_cast<size_t>(id_)].grad;
}

bool Var::requires_grad() const {
  return tape_->nodes_[static_cast<size_t>(id_)].requires_grad;
}

Var Tape::Constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, nullptr, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Leaf(Matrix value) {
  nodes_.push_back(
      Node{std::move(value), Matrix(), grad_enabled_, nullptr, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Param(Parameter& param) {
  if (auto it = param_nodes_.find(&param); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  // Parameter values are read in place through a copy; parameters are
  // immutable while a tape is alive.
  nodes_.push_back(Node{param.value, Matrix(), grad_enabled_, nullptr,
                        grad_enabled_ ? &param : nullptr});
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&param, id);
  return Var(this, id);
}

Var Tape::Record(Matrix value, std::span<const Var> inputs,
                 BackwardFn backward) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& v : inputs) needs = needs || v.requires_grad();
  }
  nodes_.push_back(Node{std::move(value), Matrix(), needs,
                        needs ? std::move(backward) : nullptr, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::Accumulate(const Var& var, const Matrix& delta) {
  Accumulate<Matrix>(var, delta);
}

void Tape::Backward(Var scalar) {
  if (scalar.rows() != 1 || scalar.cols() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "Backward needs a scalar");
  }
  Node& root = nodes_[static_cast<size_t>(scalar.id())];
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (int i = scalar.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(n.grad);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

namespace {

void CheckSameShape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::string(op) + ": shape mismatch " +
                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()));
  }
}

// [T x (kernel * Cin)] im2col with zero padding.
Matrix Im2Col(const Matrix& x, int kernel) {
  const Eigen::Index t_len = x.rows();
  const Eigen::Index cin = x.cols();
  const int half = kernel / 2;
  Matrix cols = Matrix::Zero(t_len, kernel * cin);
  for (int k = 0; k < kernel; ++k) {
    const int offset = k - half;
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const Eigen::Index src = t + offset;
      if (src < 0 || src >= t_len) continue;
      cols.block(t, k * cin, 1, cin) = x.row(src);
    }
  }
  return cols;
}

Matrix Col2Im(const Matrix& cols, Eigen::Index t_len, Eigen::Index cin,
              int kernel) {
  const int half = kernel / 2;
  Matrix x = Matrix::Zero(t_len, cin);
  for (int k = 0; k < kernel; ++k) {
    const int offset = k - half;
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const Eigen::Index src = t + offset;
      if (src < 0 || src >= t_len) continue;
      x.row(src) += cols.block(t, k * cin, 1, cin);
    }
  }
  return x;
}

}  // namespace

Var MatMul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kLengthMismatch, "MatMul: inner dimensions differ");
  }
  Tape* t = a.tape();
  const std::array<Var, 2> in{a, b};
  return t->Record(a.value() * b.value(), in, [t, a, b](const Matrix& g) {
    if (a.requires_grad()) t->Accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) t->Accumulate(b, a.value().transpose() * g);
  });
}

Var Add(Var a, Var b) {
  CheckSameShape(a, b, "Add");
  Tape* t = a.tape();
  const std::array<Var, 2> in{a, b};
  return t->Record(a.value() + b.value(), in, [t, a, b](const Matrix& g) {
    t->Accumulate(a, g);
    t->Accumulate(b, g);
  });
}

Var Sub(Var a, Var b) {
  CheckSameShape(a, b, "Sub");
  Tape* t = a.tape();
  const std::array<Var, 2> in{a, b};
  return t->Record(a.value() - b.value(), in, [t, a, b](const Matrix& g) {
    t->Accumulate(a, g);
    t->Accumulate(b, -g);
  });
}

Var Mul(Var a, Var b) {
  CheckSameShape(a, b, "Mul");
  Tape* t = a.tape();
  const std::array<Var, 2> in{a, b};
  return t->Record(a.value().cwiseProduct(b.value()), in,
                   [t, a, b](const Matrix& g) {
                     if (a.requires_grad()) t->Accumulate(a, g.cwiseProduct(b.value()));
                     if (b.requires_grad()) t->Accumulate(b, g.cwiseProduct(a.value()));
                   });
}

Var Scale(Var a, double s) {
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  return t->Record(a.value() * s, in,
                   [t, a, s](const Matrix& g) { t->Accumulate(a, g * s); });
}

Var AddRow(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw Error(ErrorCode::kLengthMismatch, "AddRow: bad row shape");
  }
  Tape* t = a.tape();
  const std::array<Var, 2> in{a, row};
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return t->Record(std::move(out), in, [t, a, row](const Matrix& g) {
    t->Accumulate(a, g);
    if (row.requires_grad()) t->Accumulate(row, g.colwise().sum());
  });
}

Var Affine(Var x, Var w, Var b) { return AddRow(MatMul(x, w), b); }

Var Tanh(Var a) {
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  Matrix y = a.value().array().tanh().matrix();
  const int id = static_cast<int>(t->size());
  return t->Record(std::move(y), in, [t, a, id](const Matrix& g) {
    const Matrix& y = Var(t, id).value();
    t->Accumulate(a, g.array() * (1.0 - y.array().square()));
  });
}

Var Sigmoid(Var a) {
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  const int id = static_cast<int>(t->size());
  return t->Record(std::move(y), in, [t, a, id](const Matrix& g) {
    const Matrix& y = Var(t, id).value();
    t->Accumulate(a, g.array() * y.array() * (1.0 - y.array()));
  });
}

Var Relu(Var a) {
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  return t->Record(a.value().cwiseMax(0.0), in, [t, a](const Matrix& g) {
    t->Accumulate(a, (a.value().array() > 0.0).select(g, 0.0));
  });
}

Var Log(Var a) {
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  return t->Record(a.value().array().log().matrix(), in,
                   [t, a](const Matrix& g) {
                     t->Accumulate(a, g.array() / a.value().array());
                   });
}

Var Square(Var a) {
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  return t->Record(a.value().array().square().matrix(), in,
                   [t, a](const Matrix& g) {
                     t->Accumulate(a, 2.0 * g.array() * a.value().array());
                   });
}

Var Transpose(Var a) {
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  return t->Record(a.value().transpose(), in, [t, a](const Matrix& g) {
    t->Accumulate(a, g.transpose());
  });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::kInvalidArgument, "empty concat");
  Tape* t = parts[0].tape();
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) {
      throw Error(ErrorCode::kLengthMismatch, "ConcatCols: row mismatch");
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return t->Record(std::move(out), parts, [t, keep](const Matrix& g) {
    Eigen::Index at = 0;
    for (const Var& p : keep) {
      if (p.requires_grad()) t->Accumulate(p, g.middleCols(at, p.cols()));
      at += p.cols();
    }
  });
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::kInvalidArgument, "empty concat");
  Tape* t = parts[0].tape();
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) {
      throw Error(ErrorCode::kLengthMismatch, "ConcatRows: column mismatch");
    }
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return t->Record(std::move(out), parts, [t, keep](const Matrix& g) {
    Eigen::Index at = 0;
    for (const Var& p : keep) {
      if (p.requires_grad()) t->Accumulate(p, g.middleRows(at, p.rows()));
      at += p.rows();
    }
  });
}

Var SliceCols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "SliceCols out of range");
  }
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  return t->Record(a.value().middleCols(start, count), in,
                   [t, a, start, count](const Matrix& g) {
                     Matrix full = Matrix::Zero(a.rows(), a.cols());
                     full.middleCols(start, count) = g;
                     t->Accumulate(a, full);
                   });
}

Var SliceRows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "SliceRows out of range");
  }
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  return t->Record(a.value().middleRows(start, count), in,
                   [t, a, start, count](const Matrix& g) {
                     Matrix full = Matrix::Zero(a.rows(), a.cols());
                     full.middleRows(start, count) = g;
                     t->Accumulate(a, full);
                   });
}

Var SumAll(Var a) {
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  return t->Record(Matrix::Constant(1, 1, a.value().sum()), in,
                   [t, a](const Matrix& g) {
                     t->Accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
                   });
}

Var MeanAll(Var a) {
  return Scale(SumAll(a), 1.0 / static_cast<double>(a.value().size()));
}

Var MeanRows(Var a) {
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  const double inv = 1.0 / static_cast<double>(a.rows());
  return t->Record(a.value().colwise().mean(), in, [t, a, inv](const Matrix& g) {
    Matrix full(a.rows(), a.cols());
    full.rowwise() = g.row(0) * inv;
    t->Accumulate(a, full);
  });
}

Var SoftmaxRows(Var a, const std::vector<bool>* mask) {
  const Matrix& x = a.value();
  if (mask != nullptr && static_cast<Eigen::Index>(mask->size()) != x.cols()) {
    throw Error(ErrorCode::kLengthMismatch, "softmax mask size");
  }
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (mask == nullptr || (*mask)[static_cast<size_t>(c)]) mx = std::max(mx, x(r, c));
    }
    double sum = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (mask == nullptr || (*mask)[static_cast<size_t>(c)]) {
        y(r, c) = std::exp(x(r, c) - mx);
        sum += y(r, c);
      }
    }
    y.row(r) /= sum;
  }
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  const int id = static_cast<int>(t->size());
  return t->Record(std::move(y), in, [t, a, id](const Matrix& g) {
    const Matrix& y = Var(t, id).value();
    const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    Matrix dx = y.cwiseProduct(g);
    dx -= y.cwiseProduct(dot.replicate(1, y.cols()));
    t->Accumulate(a, dx);
  });
}

Var Gather(Var table, std::span<const int> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw Error(ErrorCode::kOutOfVocabulary,
                  "index " + std::to_string(ids[i]) + " out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  Tape* t = table.tape();
  const std::array<Var, 1> in{table};
  std::vector<int> keep(ids.begin(), ids.end());
  return t->Record(std::move(out), in, [t, table, keep](const Matrix& g) {
    Matrix full = Matrix::Zero(table.rows(), table.cols());
    for (size_t i = 0; i < keep.size(); ++i) {
      full.row(keep[i]) += g.row(static_cast<Eigen::Index>(i));
    }
    t->Accumulate(table, full);
  });
}

Var Conv1dNoBias(Var x, Var weight, int kernel) {
  if (kernel < 1 || weight.rows() != kernel * x.cols()) {
    throw Error(ErrorCode::kLengthMismatch, "Conv1d: weight shape");
  }
  Tape* t = x.tape();
  Matrix cols = Im2Col(x.value(), kernel);
  Matrix out = cols * weight.value();
  const std::array<Var, 2> in{x, weight};
  return t->Record(std::move(out), in,
                   [t, x, weight, kernel, cols = std::move(cols)](const Matrix& g) {
                     if (weight.requires_grad()) {
                       t->Accumulate(weight, cols.transpose() * g);
                     }
                     if (x.requires_grad()) {
                       t->Accumulate(x, Col2Im(g * weight.value().transpose(),
                                               x.rows(), x.cols(), kernel));
                     }
                   });
}

Var Conv1d(Var x, Var weight, Var bias, int kernel) {
  return AddRow(Conv1dNoBias(x, weight, kernel), bias);
}

Var GradientReversal(Var a) {
  Tape* t = a.tape();
  const std::array<Var, 1> in{a};
  return t->Record(a.value(), in,
                   [t, a](const Matrix& g) { t->Accumulate(a, -g); });
}

Var LstmCell(Var gates, Var c_prev) {
  const Eigen::Index h = c_prev.cols();
  if (gates.cols() != 4 * h || gates.rows() != c_prev.rows()) {
    throw Error(ErrorCode::kLengthMismatch, "LstmCell: gate shape");
  }
  const auto& z = gates.value().array();
  auto sig = [](const auto& v) { return 1.0 / (1.0 + (-v).exp()); };
  Eigen::ArrayXXd i = sig(z.leftCols(h));
  Eigen::ArrayXXd f = sig(z.middleCols(h, h));
  Eigen::ArrayXXd g = z.middleCols(2 * h, h).tanh();
  Eigen::ArrayXXd o = sig(z.rightCols(h));
  Eigen::ArrayXXd c = f * c_prev.value().array() + i * g;
  Eigen::ArrayXXd tc = c.tanh();
  Matrix out(gates.rows(), 2 * h);
  out.leftCols(h) = (o * tc).matrix();
  out.rightCols(h) = c.matrix();
  Tape* t = gates.tape();
  const std::array<Var, 2> in{gates, c_prev};
  return t->Record(
      std::move(out), in,
      [t, gates, c_prev, h, i = std::move(i), f = std::move(f),
       g = std::move(g), o = std::move(o), tc = std::move(tc)](const Matrix& grad) {
        const Eigen::ArrayXXd dh = grad.leftCols(h).array();
        const Eigen::ArrayXXd dc =
            grad.rightCols(h).array() + dh * o * (1.0 - tc.square());
        if (gates.requires_grad()) {
          Matrix dz(gates.rows(), 4 * h);
          dz.leftCols(h) = (dc * g * i * (1.0 - i)).matrix();
          dz.middleCols(h, h) =
              (dc * c_prev.value().array() * f * (1.0 - f)).matrix();
          dz.middleCols(2 * h, h) = (dc * i * (1.0 - g.square())).matrix();
          dz.rightCols(h) = (dh * tc * o * (1.0 - o)).matrix();
          t->Accumulate(gates, dz);
        }
        if (c_prev.requires_grad()) t->Accumulate(c_prev, (dc * f).matrix());
      });
}

Var RmseLoss(Var pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error(ErrorCode::kLengthMismatch, "RMSE: shape mismatch");
  }
  Matrix diff = pred.value() - target;
  const double n = static_cast<double>(diff.size());
  const double rmse = std::sqrt(diff.squaredNorm() / n);
  Tape* t = pred.tape();
  const std::array<Var, 1> in{pred};
  return t->Record(Matrix::Constant(1, 1, rmse), in,
                   [t, pred, rmse, n, diff = std::move(diff)](const Matrix& g) {
                     t->Accumulate(pred, diff * (g(0, 0) / (n * std::max(rmse, 1e-12))));
                   });
}

Var BceLoss(Var prob, const Matrix& target, double eps) {
  if (prob.rows() != target.rows() || prob.cols() != target.cols()) {
    throw Error(ErrorCode::kLengthMismatch, "BCE: shape mismatch");
  }
  const Eigen::ArrayXXd p = prob.value().array().cwiseMax(eps).cwiseMin(1.0 - eps);
  const Eigen::ArrayXXd y = target.array();
  const double n = static_cast<double>(p.size());
  const double loss = -(y * p.log() + (1.0 - y) * (1.0 - p).log()).sum() / n;
  Tape* t = prob.tape();
  const std::array<Var, 1> in{prob};
  return t->Record(Matrix::Constant(1, 1, loss), in,
                   [t, prob, p, y, n, eps](const Matrix& g) {
                     const Eigen::ArrayXXd raw = prob.value().array();
                     const Eigen::ArrayXXd inside =
                         ((raw >= eps) && (raw <= 1.0 - eps)).cast<double>();
                     const Eigen::ArrayXXd d = (p - y) / (p * (1.0 - p)) / n;
                     t->Accumulate(prob, (g(0, 0) * d * inside).matrix());
                   });
}

Var CrossEntropyLoss(Var logits, int target) {
  if (logits.rows() != 1 || target < 0 || target >= logits.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "cross entropy target out of range");
  }
  const RowVector z = logits.value().row(0);
  const double mx = z.maxCoeff();
  RowVector p = (z.array() - mx).exp().matrix();
  const double sum = p.sum();
  p /= sum;
  const double loss = -(z(target) - mx - std::log(sum));
  Tape* t = logits.tape();
  const std::array<Var, 1> in{logits};
  return t->Record(Matrix::Constant(1, 1, loss), in,
                   [t, logits, p, target](const Matrix& g) {
                     Matrix d = p;
                     d(0, target) -= 1.0;
                     t->Accumulate(logits, d * g(0, 0));
                   });
}

}  // namespace prosodykit::ad
