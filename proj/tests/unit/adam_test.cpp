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

#include "oproute/adam.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

namespace oproute {
namespace {

TEST(Adam, FirstStepMovesByLearningRate) {
  AdamState st;
  st.config.lr = 0.1;
  std::vector<Tensor> p{Tensor({3}, std::vector<double>{1.0, -2.0, 0.5})};
  const std::vector<Tensor> g{Tensor({3}, std::vector<double>{4.0, -0.25, 1e-3})};
  adam_step(st, p, g, false);
  // Bias-corrected m/sqrt(v) is sign(g) up to eps on the first step.
  EXPECT_NEAR(p[0][0], 1.0 - 0.1, 1e-7);
  EXPECT_NEAR(p[0][1], -2.0 + 0.1, 1e-6);
  EXPECT_NEAR(p[0][2], 0.5 - 0.1 * 1e-3 / (1e-3 + 1e-8), 1e-12);
}

TEST(Adam, MaximizeAscends) {
  AdamState up, down;
  std::vector<Tensor> a{Tensor::scalar(0.0)}, b{Tensor::scalar(0.0)};
  const std::vector<Tensor> g{Tensor::scalar(2.0)};
  adam_step(up, a, g, true);
  adam_step(down, b, g, false);
  EXPECT_GT(a[0].item(), 0.0);
  EXPECT_DOUBLE_EQ(a[0].item(), -b[0].item());
}

TEST(Adam, ZeroGradientKeepsParameters) {
  AdamState st;
  std::vector<Tensor> p{Tensor({2, 2}, 3.0)};
  const std::vector<Tensor> g{Tensor({2, 2})};
  for (int i = 0; i < 5; ++i) adam_step(st, p, g, true);
  EXPECT_EQ(p[0], Tensor({2, 2}, 3.0));
  EXPECT_EQ(st.step, 5u);
}

TEST(Adam, SecondStepMatchesClosedForm) {
  AdamState st;
  std::vector<Tensor> p{Tensor::scalar(0.0)};
  adam_step(st, p, std::vector<Tensor>{Tensor::scalar(1.0)}, false);
  adam_step(st, p, std::vector<Tensor>{Tensor::scalar(3.0)}, false);
  const double m = (0.9 * 0.1 * 1.0 + 0.1 * 3.0) / (1 - 0.81);
  const double v = (0.999 * 0.001 * 1.0 + 0.001 * 9.0) / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p[0].item(), -0.05 - 0.05 * m / (std::sqrt(v) + 1e-8), 1e-9);
}

TEST(Adam, MinimizesAQuadratic) {
  AdamState st;
  std::vector<Tensor> p{Tensor::scalar(5.0)};
  for (int i = 0; i < 2000; ++i) {
    const std::vector<Tensor> g{Tensor::scalar(2.0 * (p[0].item() - 1.5))};
    adam_step(st, p, g, false);
  }
  EXPECT_NEAR(p[0].item(), 1.5, 1e-2);
}

}  // namespace
}  // namespace oproute
