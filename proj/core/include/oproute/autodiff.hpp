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

// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape records every operation in evaluation order. Each record keeps its
// forward value and a pullback that maps the gradient of the record's output
// to gradient contributions on its inputs. backward() walks the records once
// in reverse order.
//
// Layout conventions used by the graph-network ops:
//   node signals  (n, S, F)   node-major, S independent signals, F features
//   edge tensors  (S, n, n)   one n x n matrix per signal
// With this layout a shift by an n x n operator acts on the (n, S*F) view and
// a feature mixing matmul acts on the (n*S, F) view of the same buffer.
//
// A tape is single-threaded. Use one tape per thread.

#ifndef OPROUTE_AUTODIFF_HPP_
#define OPROUTE_AUTODIFF_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "oproute/tensor.hpp"

namespace oproute::ad {

class Tape;

// Handle to a record on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Accumulates upstream gradient into input gradients. `output` is the
// record's forward value. Entries of `inputs` are null for inputs that do not
// need a gradient.
using Pullback = std::function<void(const Tensor& upstream, const Tensor& output,
                                    std::span<Tensor* const> inputs)>;

class Gradients {
 public:
  // Gradient with respect to v; zeros when v does not reach the loss.
  const Tensor& operator[](const Var& v) const&;
  // Copy out of a temporary, so tape.backward(loss)[x] stays valid.
  Tensor operator[](const Var& v) && { return static_cast<const Gradients&>(*this)[v]; }

 private:
  friend class Tape;
  std::vector<Tensor> grads_;
  std::vector<Shape> shapes_;
  mutable std::vector<Tensor> zeros_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable input.
  Var leaf(Tensor value);
  // Input that never receives a gradient.
  Var constant(Tensor value);

  // Used by op implementations. `value` must already be computed.
  Var record(const char* op, Tensor value, std::vector<Var> inputs,
             Pullback pullback);

  // Exact reverse-mode gradients of a single-element loss.
  Gradients backward(const Var& loss) const;

  const Tensor& value(const Var& v) const;
  bool requires_grad(const Var& v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Smallest |input| seen by a piecewise-linear op, for gradient checks.
  void note_kink(double margin) noexcept;
  double kink_margin() const noexcept { return kink_margin_; }

 private:
  struct Node {
    const char* op;
    Tensor value;
    std::vector<std::size_t> inputs;
    Pullback pullback;
    bool requires_grad;
  };

  void check_owned(const Var& v) const;

  // deque keeps record addresses stable while the tape grows.
  std::deque<Node> nodes_;
  double kink_margin_ = std::numeric_limits<double>::infinity();
};

// ---- elementwise and algebraic ops ------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var offset(const Var& a, double shift);
Var hadamard(const Var& a, const Var& b);
Var log(const Var& a);
Var relu(const Var& a);
Var tanh(const Var& a);
Var reshape(const Var& a, Shape shape);

// a (..., k) times b (k, m) -> (..., m).
Var matmul(const Var& a, const Var& b);

// Applies a constant n x n operator to the leading axis of z (n, ...).
Var shift(const Tensor& op, const Var& z);
// op^power z by repeated shifts; op^power is never formed.
Var shift_power(const Tensor& op, const Var& z, std::size_t power);

// Softmax along the last axis.
Var row_softmax(const Var& a);
// Softmax along the last axis restricted to entries where support != 0.
// support has the shape of the trailing n x n block and is broadcast over
// leading axes. Rows without support come out all-zero.
Var masked_row_softmax(const Var& a, const Tensor& support);
// Softmax along the last axis over the allowed entries plus one implicit
// zero-logit slot. allowed has the same shape as a. Each row sums below 1.
Var softmax_with_idle(const Var& a, const Tensor& allowed);

Var sum(const Var& a);
Var mean(const Var& a);
Var squared_norm(const Var& a);
// (a, b, c) -> (a, c) averaging over the middle axis.
Var mean_axis1(const Var& a);
// (K, ...) -> (...) taking index k of the leading axis.
Var slice_first(const Var& a, std::size_t k);

// ---- graph-network ops ------------------------------------------------------

// p, y: (n, S, F) -> (S, n, n) with out[s,i,j] = sum_f p[i,s,f] y[j,s,f].
Var pairwise_bilinear(const Var& p, const Var& y);
// weights (n, n) constant, keep (S, n, n), v (n, S, ...) with trailing size 1
// -> (n, S): out[i,s] = sum_j weights[i,j] keep[s,i,j] v[j,s].
Var neighbor_inflow(const Tensor& weights, const Var& keep, const Var& v);

}  // namespace oproute::ad

#endif  // OPROUTE_AUTODIFF_HPP_
