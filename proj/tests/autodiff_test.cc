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

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "prosodykit/autodiff.h"

namespace prosodykit::ad {
namespace {

using Builder = std::function<Var(Tape&, std::vector<Var>&)>;

Matrix RandomMatrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

double Evaluate(const Builder& build, const std::vector<Matrix>& inputs) {
  Tape tape(false);
  std::vector<Var> vars;
  for (const Matrix& m : inputs) vars.push_back(tape.Leaf(m));
  return build(tape, vars).value()(0, 0);
}

// Max relative error between the analytic gradient and central differences.
double GradientError(const Builder& build, std::vector<Matrix> inputs,
                     double step = 1e-5) {
  Tape tape;
  std::vector<Var> vars;
  for (const Matrix& m : inputs) vars.push_back(tape.Leaf(m));
  tape.Backward(build(tape, vars));
  double worst = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    const Matrix analytic = vars[k].grad().size() == 0
                                ? Matrix::Zero(inputs[k].rows(), inputs[k].cols())
                                : vars[k].grad();
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      const double orig = inputs[k].data()[i];
      inputs[k].data()[i] = orig + step;
      const double up = Evaluate(build, inputs);
      inputs[k].data()[i] = orig - step;
      const double down = Evaluate(build, inputs);
      inputs[k].data()[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double err = std::abs(numeric - analytic.data()[i]) /
                         std::max(1.0, std::abs(numeric) + std::abs(analytic.data()[i]));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// Reduces a matrix to a scalar with fixed random weights so every entry
// contributes a distinct gradient.
Var Project(Tape& t, Var x, uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  return SumAll(Mul(x, t.Constant(RandomMatrix(rng, static_cast<int>(x.rows()),
                                                static_cast<int>(x.cols())))));
}

class OpGradientTest : public ::testing::Test {
 protected:
  std::mt19937_64 rng_{42};
};

TEST_F(OpGradientTest, LinearAlgebra) {
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, MatMul(v[0], v[1]));
            }, {RandomMatrix(rng_, 3, 4), RandomMatrix(rng_, 4, 5)}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, Affine(v[0], v[1], v[2]));
            }, {RandomMatrix(rng_, 3, 4), RandomMatrix(rng_, 4, 2),
                RandomMatrix(rng_, 1, 2)}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, Sub(Mul(v[0], v[1]), Scale(Add(v[0], v[1]), 0.3)));
            }, {RandomMatrix(rng_, 2, 3), RandomMatrix(rng_, 2, 3)}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, Transpose(v[0]));
            }, {RandomMatrix(rng_, 2, 3)}), 1e-7);
}

TEST_F(OpGradientTest, Pointwise) {
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, Tanh(v[0])) ;
            }, {RandomMatrix(rng_, 3, 3)}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, Sigmoid(v[0]));
            }, {RandomMatrix(rng_, 3, 3)}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, Relu(v[0]));
            }, {RandomMatrix(rng_, 3, 3)}), 1e-6);
  Matrix pos = RandomMatrix(rng_, 2, 2).cwiseAbs().array() + 0.5;
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, Log(v[0]));
            }, {pos}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, Square(v[0]));
            }, {RandomMatrix(rng_, 2, 3)}), 1e-7);
}

TEST_F(OpGradientTest, Structural) {
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              const std::vector<Var> parts{v[0], v[1]};
              return Project(t, ConcatCols(parts));
            }, {RandomMatrix(rng_, 2, 3), RandomMatrix(rng_, 2, 1)}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              const std::vector<Var> parts{v[0], v[1]};
              return Project(t, ConcatRows(parts));
            }, {RandomMatrix(rng_, 2, 3), RandomMatrix(rng_, 1, 3)}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, Add(SliceCols(v[0], 1, 2), SliceRows(v[1], 2, 3)));
            }, {RandomMatrix(rng_, 3, 4), RandomMatrix(rng_, 5, 2)}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, MeanRows(v[0]));
            }, {RandomMatrix(rng_, 4, 3)}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              const std::vector<int> ids{2, 0, 2};
              return Project(t, Gather(v[0], ids));
            }, {RandomMatrix(rng_, 4, 3)}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, Conv1d(v[0], v[1], v[2], 3));
            }, {RandomMatrix(rng_, 6, 2), RandomMatrix(rng_, 6, 4),
                RandomMatrix(rng_, 1, 4)}), 1e-7);
}

TEST_F(OpGradientTest, SoftmaxAndLstm) {
  const std::vector<bool> mask{true, true, false, true};
  EXPECT_LT(GradientError([&](Tape& t, std::vector<Var>& v) {
              return Project(t, SoftmaxRows(v[0], &mask));
            }, {RandomMatrix(rng_, 2, 4)}), 1e-7);
  EXPECT_LT(GradientError([](Tape& t, std::vector<Var>& v) {
              return Project(t, LstmCell(v[0], v[1]));
            }, {RandomMatrix(rng_, 1, 12), RandomMatrix(rng_, 1, 3)}), 1e-7);
}

TEST_F(OpGradientTest, Losses) {
  const Matrix target = RandomMatrix(rng_, 3, 2);
  EXPECT_LT(GradientError([&](Tape&, std::vector<Var>& v) {
              return RmseLoss(v[0], target);
            }, {RandomMatrix(rng_, 3, 2)}), 1e-7);
  Matrix prob = Matrix::Constant(1, 4, 0.3);
  prob << 0.2, 0.7, 0.5, 0.9;
  Matrix gate(1, 4);
  gate << 0, 1, 0, 1;
  EXPECT_LT(GradientError([&](Tape&, std::vector<Var>& v) {
              return BceLoss(v[0], gate, 1e-7);
            }, {prob}), 1e-7);
  EXPECT_LT(GradientError([](Tape&, std::vector<Var>& v) {
              return CrossEntropyLoss(v[0], 2);
            }, {RandomMatrix(rng_, 1, 5)}), 1e-7);
}

TEST(SoftmaxTest, MaskedEntriesAreExactlyZero) {
  Tape t(false);
  const std::vector<bool> mask{true, false, true};
  const Var y = SoftmaxRows(t.Constant(Matrix::Constant(2, 3, 1.0)), &mask);
  EXPECT_EQ(y.value()(0, 1), 0.0);
  EXPECT_NEAR(y.value().row(1).sum(), 1.0, 1e-15);
}

TEST(GradientReversalTest, ForwardIdentityBackwardNegated) {
  std::mt19937_64 rng(3);
  const Matrix x = RandomMatrix(rng, 2, 3);
  const Matrix w = RandomMatrix(rng, 3, 2);
  Tape t;
  const Var leaf = t.Leaf(x);
  const Var rev = GradientReversal(leaf);
  EXPECT_EQ(rev.value(), x);
  t.Backward(SumAll(Tanh(MatMul(rev, t.Constant(w)))));

  Tape plain;
  const Var leaf2 = plain.Leaf(x);
  plain.Backward(SumAll(Tanh(MatMul(leaf2, plain.Constant(w)))));
  EXPECT_TRUE(leaf.grad().isApprox(-leaf2.grad(), 1e-15));
}

TEST(ParameterTest, GradientsAccumulateIntoParameters) {
  ParameterSet params;
  Parameter& w = params.Add("w", Matrix::Constant(2, 1, 2.0));
  Tape t;
  const Var x = t.Constant(Matrix::Constant(1, 2, 3.0));
  t.Backward(SumAll(MatMul(x, t.Param(w))));
  EXPECT_EQ(w.grad, Matrix::Constant(2, 1, 3.0));
  params.ZeroGrad();
  EXPECT_EQ(w.grad, Matrix::Zero(2, 1));
  EXPECT_THROW(params.Add("w", Matrix()), std::exception);
}

}  // namespace
}  // namespace prosodykit::ad
