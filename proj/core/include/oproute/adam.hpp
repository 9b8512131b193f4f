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

#ifndef OPROUTE_ADAM_HPP_
#define OPROUTE_ADAM_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "oproute/tensor.hpp"

namespace oproute {

struct AdamConfig {
  double lr = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;
};

// Moments are allocated on first use to match the parameter shapes.
// With maximize set the update ascends along grads.
void adam_step(AdamState& state, std::span<Tensor> params,
               std::span<const Tensor> grads, bool maximize);

}  // namespace oproute

#endif  // OPROUTE_ADAM_HPP_
