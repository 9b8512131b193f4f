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

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include "oproute/errors.hpp"

namespace oproute::ad {

namespace {

[[noreturn]] void shape_mismatch(const char* op, const Shape& a,
                                 const Shape& b) {
  throw ContractError(std::string(op) + ": shape mismatch " + shape_string(a) +
                      " vs " + shape_string(b));
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) shape_mismatch(op, a.shape(), b.shape());
}

Tape& tape_of(const char* op, const Var& a) {
  if (!a.valid()) throw ContractError(std::string(op) + ": invalid variable");
  return *a.tape();
}

Tape& tape_of(const char* op, const Var& a, const Var& b) {
  Tape& t = tape_of(op, a);
  if (b.tape() != &t) {
    throw ContractError(std::string(op) + ": operands live on different tapes");
  }
  return t;
}

// C (m x n) += A (m x k) * B (k x n), all row-major.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// C (m x k) += G (m x n) * B^T where B is (k x n).
void gemm_nt(const double* g, const double* b, double* c, std::size_t m,
             std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
      ci[p] += acc;
    }
  }
}

// C (k x n) += A^T G where A is (m x k) and G is (m x n).
void gemm_tn(const double* a, const double* g, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * gi[j];
    }
  }
}

Var finish(Tape& tape, const char* op, Tensor value, std::vector<Var> inputs,
           Pullback pullback) {
  if (!value.all_finite()) {
    throw NumericHealthError(std::string(op) + ": produced non-finite value");
  }
  return tape.record(op, std::move(value), std::move(inputs),
                     std::move(pullback));
}

}  // namespace

// ---- Var / Gradients / Tape -------------------------------------------------

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw ContractError("var: not attached to a tape");
  return tape_->value(*this);
}

const Tensor& Gradients::operator[](const Var& v) const& {
  const std::size_t id = v.id();
  if (id >= grads_.size()) throw ContractError("gradients: unknown variable");
  if (!grads_[id].empty() || shape_size(shapes_[id]) == 0) return grads_[id];
  if (zeros_.size() != grads_.size()) zeros_.resize(grads_.size());
  if (zeros_[id].shape() != shapes_[id] || zeros_[id].empty()) {
    zeros_[id] = Tensor(shapes_[id]);
  }
  return zeros_[id];
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{"leaf", std::move(value), {}, nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{"constant", std::move(value), {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, std::vector<Var> inputs,
                 Pullback pullback) {
  Node node{op, std::move(value), {}, std::move(pullback), false};
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    check_owned(in);
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(const Var& v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractError("tape: variable does not belong to this tape");
  }
}

const Tensor& Tape::value(const Var& v) const {
  check_owned(v);
  return nodes_[v.id()].value;
}

bool Tape::requires_grad(const Var& v) const {
  check_owned(v);
  return nodes_[v.id()].requires_grad;
}

void Tape::note_kink(double margin) noexcept {
  kink_margin_ = std::min(kink_margin_, margin);
}

Gradients Tape::backward(const Var& loss) const {
  check_owned(loss);
  if (nodes_[loss.id()].value.size() != 1) {
    throw ContractError("backward: loss must be a single element, got shape " +
                        shape_string(nodes_[loss.id()].value.shape()));
  }
  Gradients out;
  out.grads_.resize(nodes_.size());
  out.shapes_.reserve(nodes_.size());
  for (const Node& n : nodes_) out.shapes_.push_back(n.value.shape());

  out.grads_[loss.id()] = Tensor(nodes_[loss.id()].value.shape(), 1.0);
  std::vector<Tensor*> input_grads;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!node.pullback || out.grads_[id].empty()) continue;
    input_grads.assign(node.inputs.size(), nullptr);
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      const std::size_t in = node.inputs[i];
      if (!nodes_[in].requires_grad) continue;
      if (out.grads_[in].empty()) out.grads_[in] = Tensor(nodes_[in].value.shape());
      input_grads[i] = &out.grads_[in];
    }
    node.pullback(out.grads_[id], node.value, input_grads);
  }
  return out;
}

// ---- elementwise ------------------------------------------------------------

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of("add", a, b);
  require_same_shape("add", a, b);
  Tensor out = a.value();
  const auto bv = b.value().data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += bv[i];
  return finish(t, "add", std::move(out), {a, b},
                [](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  for (Tensor* d : in) {
                    if (d == nullptr) continue;
                    for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] += g[i];
                  }
                });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = tape_of("sub", a, b);
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  const auto bv = b.value().data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] -= bv[i];
  return finish(t, "sub", std::move(out), {a, b},
                [](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] != nullptr)
                    for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
                  if (in[1] != nullptr)
                    for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] -= g[i];
                });
}

Var scale(const Var& a, double factor) {
  Tape& t = tape_of("scale", a);
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return finish(t, "scale", std::move(out), {a},
                [factor](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  for (std::size_t i = 0; i < g.size(); ++i)
                    (*in[0])[i] += factor * g[i];
                });
}

Var offset(const Var& a, double shift) {
  Tape& t = tape_of("offset", a);
  Tensor out = a.value();
  for (double& v : out.data()) v += shift;
  return finish(t, "offset", std::move(out), {a},
                [](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
                });
}

Var hadamard(const Var& a, const Var& b) {
  Tape& t = tape_of("hadamard", a, b);
  require_same_shape("hadamard", a, b);
  Tensor out = a.value();
  const auto bv = b.value().data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] *= bv[i];
  const Tensor* av = &a.value();
  const Tensor* bt = &b.value();
  return finish(t, "hadamard", std::move(out), {a, b},
                [av, bt](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] != nullptr)
                    for (std::size_t i = 0; i < g.size(); ++i)
                      (*in[0])[i] += g[i] * (*bt)[i];
                  if (in[1] != nullptr)
                    for (std::size_t i = 0; i < g.size(); ++i)
                      (*in[1])[i] += g[i] * (*av)[i];
                });
}

Var log(const Var& a) {
  Tape& t = tape_of("log", a);
  Tensor out = a.value();
  for (double& v : out.data()) {
    if (!(v > 0.0)) throw DomainError("log: non-positive argument");
    v = std::log(v);
  }
  const Tensor* av = &a.value();
  return finish(t, "log", std::move(out), {a},
                [av](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  for (std::size_t i = 0; i < g.size(); ++i)
                    (*in[0])[i] += g[i] / (*av)[i];
                });
}

Var relu(const Var& a) {
  Tape& t = tape_of("relu", a);
  Tensor out = a.value();
  double margin = std::numeric_limits<double>::infinity();
  for (double& v : out.data()) {
    // Exact zeros come from masking and stay put under perturbation.
    if (v != 0.0) margin = std::min(margin, std::abs(v));
    v = v > 0.0 ? v : 0.0;
  }
  t.note_kink(margin);
  const Tensor* av = &a.value();
  return finish(t, "relu", std::move(out), {a},
                [av](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  for (std::size_t i = 0; i < g.size(); ++i)
                    if ((*av)[i] > 0.0) (*in[0])[i] += g[i];
                });
}

Var tanh(const Var& a) {
  Tape& t = tape_of("tanh", a);
  Tensor out = a.value();
  for (double& v : out.data()) v = std::tanh(v);
  return finish(t, "tanh", std::move(out), {a},
                [](const Tensor& g, const Tensor& y, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  for (std::size_t i = 0; i < g.size(); ++i)
                    (*in[0])[i] += g[i] * (1.0 - y[i] * y[i]);
                });
}

Var reshape(const Var& a, Shape shape) {
  Tape& t = tape_of("reshape", a);
  Tensor out = a.value().reshaped(std::move(shape));
  return finish(t, "reshape", std::move(out), {a},
                [](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
                });
}

// ---- linear algebra ---------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of("matmul", a, b);
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.empty() || bs.size() != 2 || as.back() != bs[0]) {
    shape_mismatch("matmul", as, bs);
  }
  const std::size_t k = bs[0];
  const std::size_t n = bs[1];
  const std::size_t m = a.value().size() / k;
  Shape os = as;
  os.back() = n;
  Tensor out(os);
  gemm_nn(a.value().data().data(), b.value().data().data(), out.data().data(),
          m, k, n);
  const Tensor* av = &a.value();
  const Tensor* bv = &b.value();
  return finish(t, "matmul", std::move(out), {a, b},
                [av, bv, m, k, n](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] != nullptr)
                    gemm_nt(g.data().data(), bv->data().data(),
                            in[0]->data().data(), m, n, k);
                  if (in[1] != nullptr)
                    gemm_tn(av->data().data(), g.data().data(),
                            in[1]->data().data(), m, k, n);
                });
}

Var shift(const Tensor& op, const Var& z) {
  Tape& t = tape_of("shift", z);
  const Shape& zs = z.shape();
  if (op.rank() != 2 || op.dim(0) != op.dim(1) || zs.empty() ||
      zs[0] != op.dim(0)) {
    shape_mismatch("shift", op.shape(), zs);
  }
  const std::size_t n = op.dim(0);
  const std::size_t cols = z.value().size() / std::max<std::size_t>(n, 1);
  Tensor out(zs);
  gemm_nn(op.data().data(), z.value().data().data(), out.data().data(), n, n,
          cols);
  // Shifts are recorded with a private copy of the operator so the record
  // stays valid independently of the caller's tensor.
  auto opc = std::make_shared<const Tensor>(op);
  return finish(t, "shift", std::move(out), {z},
                [opc, n, cols](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  // dz = op^T g
                  gemm_tn(opc->data().data(), g.data().data(),
                          in[0]->data().data(), n, n, cols);
                });
}

Var shift_power(const Tensor& op, const Var& z, std::size_t power) {
  Var out = z;
  for (std::size_t p = 0; p < power; ++p) out = shift(op, out);
  return out;
}

// ---- softmax family ---------------------------------------------------------

namespace {

// dx = y * (g - <g, y>) row by row. Masked entries have y = 0.
Pullback softmax_pullback(std::size_t width) {
  return [width](const Tensor& g, const Tensor& y, std::span<Tensor* const> in) {
    if (in[0] == nullptr) return;
    const std::size_t rows = g.size() / std::max<std::size_t>(width, 1);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * width;
      double dot = 0.0;
      for (std::size_t j = 0; j < width; ++j) dot += g[base + j] * y[base + j];
      for (std::size_t j = 0; j < width; ++j)
        (*in[0])[base + j] += y[base + j] * (g[base + j] - dot);
    }
  };
}

}  // namespace

Var row_softmax(const Var& a) {
  Tape& t = tape_of("row_softmax", a);
  if (a.shape().empty()) throw ContractError("row_softmax: scalar input");
  const std::size_t width = a.shape().back();
  Tensor out = a.value();
  const std::size_t rows = out.size() / std::max<std::size_t>(width, 1);
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.data().data() + r * width;
    const double mx = *std::max_element(row, row + width);
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) total += (row[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < width; ++j) row[j] /= total;
  }
  return finish(t, "row_softmax", std::move(out), {a}, softmax_pullback(width));
}

Var masked_row_softmax(const Var& a, const Tensor& support) {
  Tape& t = tape_of("masked_row_softmax", a);
  const Shape& as = a.shape();
  if (as.size() < 2 || support.rank() != 2 || support.dim(0) != as[as.size() - 2] ||
      support.dim(1) != as.back()) {
    shape_mismatch("masked_row_softmax", as, support.shape());
  }
  const std::size_t width = as.back();
  const std::size_t block = support.size();
  Tensor out = a.value();
  const std::size_t rows = out.size() / width;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.data().data() + r * width;
    const double* mask = support.data().data() + (r * width) % block;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < width; ++j)
      if (mask[j] != 0.0) mx = std::max(mx, row[j]);
    if (!std::isfinite(mx)) {
      std::fill(row, row + width, 0.0);
      continue;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      row[j] = mask[j] != 0.0 ? std::exp(row[j] - mx) : 0.0;
      total += row[j];
    }
    for (std::size_t j = 0; j < width; ++j) row[j] /= total;
  }
  return finish(t, "masked_row_softmax", std::move(out), {a},
                softmax_pullback(width));
}

Var softmax_with_idle(const Var& a, const Tensor& allowed) {
  Tape& t = tape_of("softmax_with_idle", a);
  if (a.shape() != allowed.shape() || a.shape().empty()) {
    shape_mismatch("softmax_with_idle", a.shape(), allowed.shape());
  }
  const std::size_t width = a.shape().back();
  Tensor out = a.value();
  const std::size_t rows = out.size() / std::max<std::size_t>(width, 1);
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.data().data() + r * width;
    const double* mask = allowed.data().data() + r * width;
    double mx = 0.0;  // the idle slot has logit 0
    for (std::size_t j = 0; j < width; ++j)
      if (mask[j] != 0.0) mx = std::max(mx, row[j]);
    double total = std::exp(-mx);
    for (std::size_t j = 0; j < width; ++j) {
      row[j] = mask[j] != 0.0 ? std::exp(row[j] - mx) : 0.0;
      total += row[j];
    }
    for (std::size_t j = 0; j < width; ++j) row[j] /= total;
  }
  return finish(t, "softmax_with_idle", std::move(out), {a},
                softmax_pullback(width));
}

// ---- reductions -------------------------------------------------------------

Var sum(const Var& a) {
  Tape& t = tape_of("sum", a);
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return finish(t, "sum", Tensor::scalar(total), {a},
                [](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  const double gv = g[0];
                  for (double& v : in[0]->data()) v += gv;
                });
}

Var mean(const Var& a) {
  Tape& t = tape_of("mean", a);
  const std::size_t count = a.value().size();
  if (count == 0) throw ContractError("mean: empty tensor");
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return finish(t, "mean", Tensor::scalar(total / static_cast<double>(count)),
                {a}, [count](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  const double gv = g[0] / static_cast<double>(count);
                  for (double& v : in[0]->data()) v += gv;
                });
}

Var squared_norm(const Var& a) {
  Tape& t = tape_of("squared_norm", a);
  double total = 0.0;
  for (double v : a.value().data()) total += v * v;
  const Tensor* av = &a.value();
  return finish(t, "squared_norm", Tensor::scalar(total), {a},
                [av](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  const double gv = 2.0 * g[0];
                  for (std::size_t i = 0; i < av->size(); ++i)
                    (*in[0])[i] += gv * (*av)[i];
                });
}

Var mean_axis1(const Var& a) {
  Tape& t = tape_of("mean_axis1", a);
  const Shape& as = a.shape();
  if (as.size() != 3 || as[1] == 0) {
    throw ContractError("mean_axis1: expected a non-empty rank-3 tensor, got " +
                        shape_string(as));
  }
  const std::size_t n = as[0], mid = as[1], w = as[2];
  Tensor out({n, w});
  const Tensor& av = a.value();
  const double inv = 1.0 / static_cast<double>(mid);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < mid; ++s)
      for (std::size_t f = 0; f < w; ++f) out(i, f) += av(i, s, f) * inv;
  return finish(t, "mean_axis1", std::move(out), {a},
                [n, mid, w, inv](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t s = 0; s < mid; ++s)
                      for (std::size_t f = 0; f < w; ++f)
                        (*in[0])(i, s, f) += g(i, f) * inv;
                });
}

Var slice_first(const Var& a, std::size_t k) {
  Tape& t = tape_of("slice_first", a);
  const Shape& as = a.shape();
  if (as.empty() || k >= as[0]) {
    throw ContractError("slice_first: index " + std::to_string(k) +
                        " out of range for shape " + shape_string(as));
  }
  const Shape os(as.begin() + 1, as.end());
  const std::size_t block = shape_size(os);
  const auto src = a.value().data().subspan(k * block, block);
  Tensor out(os, std::vector<double>(src.begin(), src.end()));
  return finish(t, "slice_first", std::move(out), {a},
                [k, block](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                  if (in[0] == nullptr) return;
                  for (std::size_t i = 0; i < block; ++i)
                    (*in[0])[k * block + i] += g[i];
                });
}

// ---- graph-network ops ------------------------------------------------------

Var pairwise_bilinear(const Var& p, const Var& y) {
  Tape& t = tape_of("pairwise_bilinear", p, y);
  const Shape& ps = p.shape();
  if (ps.size() != 3 || ps != y.shape()) {
    shape_mismatch("pairwise_bilinear", ps, y.shape());
  }
  const std::size_t n = ps[0], signals = ps[1], f = ps[2];
  Tensor out({signals, n, n});
  const Tensor& pv = p.value();
  const Tensor& yv = y.value();
  for (std::size_t s = 0; s < signals; ++s)
    for (std::size_t i = 0; i < n; ++i) {
      const double* pi = pv.data().data() + (i * signals + s) * f;
      double* orow = out.data().data() + (s * n + i) * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* yj = yv.data().data() + (j * signals + s) * f;
        double acc = 0.0;
        for (std::size_t q = 0; q < f; ++q) acc += pi[q] * yj[q];
        orow[j] = acc;
      }
    }
  const Tensor* pp = &pv;
  const Tensor* yp = &yv;
  return finish(
      t, "pairwise_bilinear", std::move(out), {p, y},
      [pp, yp, n, signals, f](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
        for (std::size_t s = 0; s < signals; ++s)
          for (std::size_t i = 0; i < n; ++i) {
            const double* grow = g.data().data() + (s * n + i) * n;
            const double* pi = pp->data().data() + (i * signals + s) * f;
            double* dpi = in[0] != nullptr
                              ? in[0]->data().data() + (i * signals + s) * f
                              : nullptr;
            for (std::size_t j = 0; j < n; ++j) {
              const double gij = grow[j];
              if (gij == 0.0) continue;
              const double* yj = yp->data().data() + (j * signals + s) * f;
              if (dpi != nullptr)
                for (std::size_t q = 0; q < f; ++q) dpi[q] += gij * yj[q];
              if (in[1] != nullptr) {
                double* dyj = in[1]->data().data() + (j * signals + s) * f;
                for (std::size_t q = 0; q < f; ++q) dyj[q] += gij * pi[q];
              }
            }
          }
      });
}

Var neighbor_inflow(const Tensor& weights, const Var& keep, const Var& v) {
  Tape& t = tape_of("neighbor_inflow", keep, v);
  const Shape& ks = keep.shape();
  if (weights.rank() != 2 || weights.dim(0) != weights.dim(1) || v.shape().empty()) {
    shape_mismatch("neighbor_inflow", weights.shape(), v.shape());
  }
  const std::size_t n = weights.dim(0);
  if (v.shape()[0] != n) shape_mismatch("neighbor_inflow", weights.shape(), v.shape());
  const std::size_t signals = v.value().size() / std::max<std::size_t>(n, 1);
  if (ks != Shape{signals, n, n}) shape_mismatch("neighbor_inflow", ks, v.shape());

  Tensor out(v.shape());
  const Tensor& kv = keep.value();
  const Tensor& vv = v.value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < signals; ++s) {
      const double* krow = kv.data().data() + (s * n + i) * n;
      const double* wrow = weights.data().data() + i * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += wrow[j] * krow[j] * vv[j * signals + s];
      out[i * signals + s] = acc;
    }
  auto wc = std::make_shared<const Tensor>(weights);
  const Tensor* kp = &kv;
  const Tensor* vp = &vv;
  return finish(
      t, "neighbor_inflow", std::move(out), {keep, v},
      [wc, kp, vp, n, signals](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t s = 0; s < signals; ++s) {
            const double gis = g[i * signals + s];
            if (gis == 0.0) continue;
            const double* wrow = wc->data().data() + i * n;
            const double* krow = kp->data().data() + (s * n + i) * n;
            if (in[0] != nullptr) {
              double* dk = in[0]->data().data() + (s * n + i) * n;
              for (std::size_t j = 0; j < n; ++j)
                dk[j] += gis * wrow[j] * (*vp)[j * signals + s];
            }
            if (in[1] != nullptr)
              for (std::size_t j = 0; j < n; ++j)
                (*in[1])[j * signals + s] += gis * wrow[j] * krow[j];
          }
      });
}

}  // namespace oproute::ad
