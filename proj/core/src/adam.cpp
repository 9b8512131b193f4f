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

#include "oproute/errors.hpp"

namespace oproute {

void adam_step(AdamState& state, std::span<Tensor> params,
               std::span<const Tensor> grads, bool maximize) {
  if (params.size() != grads.size()) {
    throw ContractError("adam: " + std::to_string(params.size()) +
                        " parameters but " + std::to_string(grads.size()) +
                        " gradients");
  }
  if (state.m.empty()) {
    for (const Tensor& p : params) {
      state.m.emplace_back(p.shape());
      state.v.emplace_back(p.shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw ContractError("adam: state was built for a different parameter set");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const double sign = maximize ? 1.0 : -1.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].shape() != grads[p].shape() ||
        params[p].shape() != state.m[p].shape()) {
      throw ContractError("adam: shape mismatch for parameter " +
                          std::to_string(p) + " " +
                          shape_string(params[p].shape()) + " vs " +
                          shape_string(grads[p].shape()));
    }
    auto x = params[p].data();
    auto g = grads[p].data();
    auto m = state.m[p].data();
    auto v = state.v[p].data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      x[i] += sign * c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace oproute
