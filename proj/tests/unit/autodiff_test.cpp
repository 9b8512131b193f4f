// Copyright 2026 The oproute Authors
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

#include "oproute/autodiff.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "op_cases.hpp"
#include "oproute/errors.hpp"

namespace oproute {
namespace {

using ad::Tape;
using ad::Var;
using testing::gradcheck;
using testing::random_tensor;
using testing::OpCase;
using testing::op_cases;
using testing::project;

void expect_passes(const testing::GradCheck& c) {
  EXPECT_LT(c.rel_error, c.tolerance) << "kink margin " << c.kink_margin;
}

TEST(Autodiff, ReluOfNegativeIsZeroWithZeroGradient) {
  Tape tape;
  Var x = tape.leaf(Tensor::scalar(-3.0));
  Var y = ad::relu(x);
  EXPECT_EQ(y.value().item(), 0.0);
  EXPECT_EQ(tape.backward(y)[x].item(), 0.0);
}

TEST(Autodiff, SquareDerivativeAtThreeIsSix) {
  Tape tape;
  Var x = tape.leaf(Tensor::scalar(3.0));
  Var y = ad::hadamard(x, x);
  EXPECT_EQ(tape.backward(y)[x].item(), 6.0);
}

TEST(Autodiff, SumOfLeafGivesOnes) {
  Tape tape;
  Var x = tape.leaf(Tensor({2, 3}, 0.7));
  const Tensor& g = tape.backward(ad::sum(x))[x];
  for (double v : g.data()) EXPECT_EQ(v, 1.0);
}

TEST(Autodiff, SoftmaxJacobianRowsSumToZero) {
  std::mt19937_64 rng(3);
  const Tensor logits = random_tensor({5}, rng, -2.0, 2.0);
  for (std::size_t pick = 0; pick < 5; ++pick) {
    Tape tape;
    Var x = tape.leaf(logits);
    Var y = ad::slice_first(ad::reshape(ad::row_softmax(x), {5, 1}), pick);
    const Tensor& g = tape.backward(ad::sum(y))[x];
    double total = 0.0;
    for (double v : g.data()) total += v;
    EXPECT_NEAR(total, 0.0, 1e-15);
  }
}

TEST(Autodiff, NonScalarLossIsRejected) {
  Tape tape;
  Var x = tape.leaf(Tensor({3}, 1.0));
  EXPECT_THROW(tape.backward(x), ContractError);
}

TEST(Autodiff, ShapeMismatchIsContractError) {
  Tape tape;
  Var a = tape.leaf(Tensor({2, 3}));
  Var b = tape.leaf(Tensor({3, 2}));
  EXPECT_THROW(ad::add(a, b), ContractError);
  EXPECT_THROW(ad::matmul(a, a), ContractError);
}

TEST(Autodiff, NonFiniteResultIsNumericHealthError) {
  Tape tape;
  Var a = tape.leaf(Tensor({2}, std::numeric_limits<double>::max()));
  EXPECT_THROW(ad::scale(a, 10.0), NumericHealthError);
}

TEST(Autodiff, LogOfNonPositiveIsDomainError) {
  Tape tape;
  Var a = tape.leaf(Tensor({2}, 0.0));
  EXPECT_THROW(ad::log(a), DomainError);
}

TEST(Autodiff, VariablesFromAnotherTapeAreRejected) {
  Tape t1, t2;
  Var a = t1.leaf(Tensor({2}, 1.0));
  Var b = t2.leaf(Tensor({2}, 1.0));
  EXPECT_THROW(ad::add(a, b), ContractError);
}

TEST(Autodiff, UnreachedLeafHasZeroGradient) {
  Tape tape;
  Var a = tape.leaf(Tensor({2, 2}, 1.0));
  Var b = tape.leaf(Tensor({3}, 1.0));
  ad::Gradients g = tape.backward(ad::sum(a));
  EXPECT_EQ(g[b].shape(), Shape{3});
  for (double v : g[b].data()) EXPECT_EQ(v, 0.0);
}

class OpGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  const OpCase c = op_cases()[GetParam()];
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    auto check = gradcheck(
        [&](Tape& tape, const std::vector<Var>& v) { return project(tape, c.op(tape, v), seed); },
        c.inputs(rng));
    SCOPED_TRACE(c.name);
    expect_passes(check);
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range<std::size_t>(0, 22),
                         [](const auto& info) { return std::string(op_cases()[info.param].name); });

TEST(Autodiff, OpTableCoversEveryCase) { EXPECT_EQ(op_cases().size(), 22u); }

TEST(Autodiff, MaskedSoftmaxRowsWithoutSupportAreZero) {
  Tape tape;
  const Tensor support({2, 2}, {0, 1, 0, 0});
  Var x = tape.leaf(Tensor({2, 2}, {0.3, -0.2, 1.0, 2.0}));
  const Tensor& y = ad::masked_row_softmax(x, support).value();
  EXPECT_EQ(y(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(y(0, 1), 1.0);
  EXPECT_EQ(y(1, 0), 0.0);
  EXPECT_EQ(y(1, 1), 0.0);
}

TEST(Autodiff, IdleSoftmaxLeavesMassForTheIdleSlot) {
  Tape tape;
  std::mt19937_64 rng(5);
  Var x = tape.leaf(random_tensor({4, 3}, rng, -30.0, 30.0));
  const Tensor& y = ad::softmax_with_idle(x, Tensor({4, 3}, 1.0)).value();
  for (std::size_t i = 0; i < 4; ++i) {
    const double total = y(i, 0) + y(i, 1) + y(i, 2);
    EXPECT_LT(total, 1.0);
  }
}

TEST(Autodiff, ReplayGivesBitIdenticalGradients) {
  std::mt19937_64 rng(11);
  const Tensor a = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({4, 2}, rng);
  auto run = [&] {
    Tape tape;
    Var x = tape.leaf(a);
    Var w = tape.leaf(b);
    Var loss = ad::squared_norm(ad::tanh(ad::matmul(x, w)));
    ad::Gradients g = tape.backward(loss);
    return std::make_pair(g[x], g[w]);
  };
  EXPECT_EQ(run(), run());
}

TEST(Autodiff, BackwardIsLinearInTheLoss) {
  std::mt19937_64 rng(12);
  const Tensor a = random_tensor({3, 3}, rng);
  const double alpha = 0.7, beta = -1.3;
  auto grad_of = [&](int which) {
    Tape tape;
    Var x = tape.leaf(a);
    Var f = ad::squared_norm(ad::row_softmax(x));
    Var g = ad::sum(ad::tanh(x));
    Var loss = which == 0 ? f : which == 1 ? g : ad::add(ad::scale(f, alpha), ad::scale(g, beta));
    return tape.backward(loss)[x];
  };
  const Tensor gf = grad_of(0), gg = grad_of(1), gc = grad_of(2);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_NEAR(gc[i], alpha * gf[i] + beta * gg[i], 1e-12);
}

TEST(Autodiff, SharedSubexpressionAccumulatesGradients) {
  Tape tape;
  Var x = tape.leaf(Tensor::scalar(2.0));
  Var y = ad::add(ad::hadamard(x, x), ad::scale(x, 3.0));
  EXPECT_DOUBLE_EQ(tape.backward(y)[x].item(), 7.0);
}

}  // namespace
}  // namespace oproute
