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

// Central finite-difference checks against reverse-mode gradients.

#ifndef OPROUTE_TESTS_GRADCHECK_HPP_
#define OPROUTE_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "oproute/autodiff.hpp"

namespace oproute::testing {

using LossFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

struct GradCheck {
  double rel_error = 0.0;   // ||ad - fd|| / max(||ad||, ||fd||, tiny)
  double kink_margin = 0.0; // smallest |relu input| seen at the base point
  double tolerance = 0.0;   // threshold the caller should apply
};

inline constexpr double kFdStep = 1e-5;
inline constexpr double kSmoothTol = 1e-5;
inline constexpr double kKinkTol = 1e-3;
// Inputs this close to a relu kink count as "near" it.
inline constexpr double kKinkWindow = 1e-4;

inline double eval_loss(const LossFn& f, const std::vector<Tensor>& inputs,
                        double* kink = nullptr) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const Tensor& t : inputs) vars.push_back(tape.leaf(t));
  const double v = f(tape, vars).value().item();
  if (kink != nullptr) *kink = tape.kink_margin();
  return v;
}

inline GradCheck gradcheck(const LossFn& f, std::vector<Tensor> inputs, double h = kFdStep) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const Tensor& t : inputs) vars.push_back(tape.leaf(t));
  ad::Var loss = f(tape, vars);
  ad::Gradients g = tape.backward(loss);
  GradCheck out;
  out.kink_margin = tape.kink_margin();
  double num = 0.0, na = 0.0, nf = 0.0;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    const Tensor& grad = g[vars[p]];
    for (std::size_t i = 0; i < inputs[p].size(); ++i) {
      const double orig = inputs[p][i];
      inputs[p][i] = orig + h;
      const double fp = eval_loss(f, inputs);
      inputs[p][i] = orig - h;
      const double fm = eval_loss(f, inputs);
      inputs[p][i] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      num += (grad[i] - fd) * (grad[i] - fd);
      na += grad[i] * grad[i];
      nf += fd * fd;
    }
  }
  out.rel_error = std::sqrt(num) / std::max({std::sqrt(na), std::sqrt(nf), 1e-300});
  out.tolerance = out.kink_margin < kKinkWindow ? kKinkTol : kSmoothTol;
  return out;
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = u(rng);
  return t;
}

}  // namespace oproute::testing

#endif  // OPROUTE_TESTS_GRADCHECK_HPP_
