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

#include "oproute/gnn.hpp"

#include <cmath>
#include <random>

#include "oproute/errors.hpp"

namespace oproute {

using ad::Tape;
using ad::Var;

std::string to_string(Activation act) {
  switch (act) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "relu";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw InvalidParameter("unknown activation '" + name + "'");
}

void GnnArchitecture::validate() const {
  if (taps.empty()) throw InvalidParameter("gnn: at least one layer is required");
  if (widths.size() != taps.size() + 1) {
    throw InvalidParameter("gnn: " + std::to_string(widths.size()) + " widths for " +
                           std::to_string(taps.size()) + " layers");
  }
  for (std::size_t w : widths)
    if (w == 0) throw InvalidParameter("gnn: feature widths must be positive");
  for (std::size_t k : taps)
    if (k == 0) throw InvalidParameter("gnn: every layer needs at least one tap");
}

std::vector<Tensor> GnnParams::flatten() const {
  std::vector<Tensor> out = filters;
  out.push_back(w_r);
  out.push_back(w_s);
  out.push_back(w_a);
  return out;
}

void GnnParams::assign(std::vector<Tensor> flat) {
  if (flat.size() != arch.layers() + 3) {
    throw ContractError("gnn: expected " + std::to_string(arch.layers() + 3) +
                        " parameter tensors, got " + std::to_string(flat.size()));
  }
  w_a = std::move(flat.back());
  flat.pop_back();
  w_s = std::move(flat.back());
  flat.pop_back();
  w_r = std::move(flat.back());
  flat.pop_back();
  filters = std::move(flat);
  validate();
}

std::vector<std::string> GnnParams::names() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < filters.size(); ++l)
    out.push_back("filter" + std::to_string(l));
  out.insert(out.end(), {"w_r", "w_s", "w_a"});
  return out;
}

void GnnParams::validate() const {
  arch.validate();
  if (filters.size() != arch.layers()) throw ContractError("gnn: filter count mismatch");
  for (std::size_t l = 0; l < filters.size(); ++l) {
    const Shape expected{arch.taps[l], arch.widths[l], arch.widths[l + 1]};
    if (filters[l].shape() != expected) {
      throw ContractError("gnn: filter" + std::to_string(l) + " has shape " +
                          shape_string(filters[l].shape()) + ", expected " +
                          shape_string(expected));
    }
  }
  const std::size_t f = arch.out_width();
  if (w_r.shape() != Shape{f, f} || w_s.shape() != Shape{f} || w_a.shape() != Shape{f}) {
    throw ContractError("gnn: head shapes do not match output width " + std::to_string(f));
  }
}

GnnParams zero_params(const GnnArchitecture& arch) {
  arch.validate();
  GnnParams p;
  p.arch = arch;
  for (std::size_t l = 0; l < arch.layers(); ++l)
    p.filters.emplace_back(Shape{arch.taps[l], arch.widths[l], arch.widths[l + 1]});
  const std::size_t f = arch.out_width();
  p.w_r = Tensor({f, f});
  p.w_s = Tensor({f});
  p.w_a = Tensor({f});
  return p;
}

GnnParams init_params(const GnnArchitecture& arch, std::uint64_t seed) {
  GnnParams p = zero_params(arch);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    const double sd =
        std::sqrt(2.0 / static_cast<double>(arch.taps[l] * arch.widths[l]));
    for (double& v : p.filters[l].data()) v = sd * normal(rng);
  }
  const double f = static_cast<double>(arch.out_width());
  for (double& v : p.w_r.data()) v = normal(rng) / f;
  for (double& v : p.w_s.data()) v = normal(rng) / std::sqrt(f);
  for (double& v : p.w_a.data()) v = normal(rng) / std::sqrt(f);
  return p;
}

Tensor graph_shift_operator(const ChannelMatrix& channel, bool normalize) {
  Tensor gso = channel.probs;
  if (!normalize) return gso;
  const std::size_t n = channel.size();
  std::vector<double> scale(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += gso(i, j);
    scale[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) gso(i, j) *= scale[i] * scale[j];
  return gso;
}

std::vector<Var> GnnVars::all() const {
  std::vector<Var> out = filters;
  out.insert(out.end(), {w_r, w_s, w_a});
  return out;
}

GnnVars attach(Tape& tape, const GnnParams& p, bool trainable) {
  p.validate();
  auto put = [&](const Tensor& t) { return trainable ? tape.leaf(t) : tape.constant(t); };
  GnnVars v;
  for (const Tensor& f : p.filters) v.filters.push_back(put(f));
  v.w_r = put(p.w_r);
  v.w_s = put(p.w_s);
  v.w_a = put(p.w_a);
  return v;
}

Var graph_filter(const Tensor& gso, const Var& z, const Var& taps) {
  const Shape& ts = taps.shape();
  if (ts.size() != 3 || z.shape().empty() || z.shape().back() != ts[1]) {
    throw ContractError("graph filter: taps " + shape_string(ts) +
                        " do not match signal " + shape_string(z.shape()));
  }
  Var shifted = z;
  Var out = ad::matmul(shifted, ad::slice_first(taps, 0));
  for (std::size_t k = 1; k < ts[0]; ++k) {
    shifted = ad::shift(gso, shifted);
    out = ad::add(out, ad::matmul(shifted, ad::slice_first(taps, k)));
  }
  return out;
}

namespace {

Var activate(const Var& v, Activation act) {
  switch (act) {
    case Activation::kRelu:
      return ad::relu(v);
    case Activation::kTanh:
      return ad::tanh(v);
    case Activation::kIdentity:
      return v;
  }
  return v;
}

}  // namespace

Var gnn_forward(const Tensor& gso, const Var& x, const GnnVars& vars,
                const GnnArchitecture& arch) {
  if (x.shape().empty() || x.shape().back() != arch.widths[0]) {
    throw ContractError("gnn: input width " +
                        (x.shape().empty() ? std::string("?")
                                           : std::to_string(x.shape().back())) +
                        " does not match F_0=" + std::to_string(arch.widths[0]));
  }
  Var z = x;
  for (std::size_t l = 0; l < arch.layers(); ++l)
    z = activate(graph_filter(gso, z, vars.filters[l]), arch.activation);
  return z;
}

DecisionVars decide(Tape& tape, const RoutingContext& ctx, const Tensor& gso,
                    const Var& x, const GnnVars& vars, const GnnArchitecture& arch,
                    const Tensor& a0) {
  const std::size_t n = ctx.nodes;
  const std::size_t signals = ctx.signals();
  if (x.shape() != Shape{n, signals, arch.widths[0]}) {
    throw ContractError("decide: features have shape " + shape_string(x.shape()) +
                        ", expected " + shape_string({n, signals, arch.widths[0]}));
  }
  const std::size_t f = arch.out_width();
  Var y = gnn_forward(gso, x, vars, arch);
  Var keep_logits = ad::pairwise_bilinear(ad::matmul(y, vars.w_r), y);
  Var transmit_logits = ad::reshape(ad::matmul(y, ad::reshape(vars.w_s, {f, 1})),
                                    {n, signals});
  Var packet_logits = ad::reshape(ad::matmul(y, ad::reshape(vars.w_a, {f, 1})),
                                  {n, signals});
  return routing_heads(tape, ctx, keep_logits, transmit_logits, packet_logits, a0);
}

Tensor graph_filter(const Tensor& gso, const Tensor& z, const Tensor& taps) {
  Tape tape;
  return graph_filter(gso, tape.constant(z), tape.constant(taps)).value();
}

Tensor gnn_forward(const ChannelMatrix& channel, const Tensor& x, const GnnParams& p) {
  Tape tape;
  GnnVars vars = attach(tape, p, false);
  return gnn_forward(graph_shift_operator(channel, p.arch.normalize_gso),
                     tape.constant(x), vars, p.arch)
      .value();
}

RoutingDecision decide(const ChannelMatrix& channel, const Topology& topo,
                       const Tensor& features, const GnnParams& p, const FlowSpec& spec,
                       const Tensor& a0) {
  const RoutingContext ctx = RoutingContext::make(channel, topo, spec, 1);
  Tape tape;
  GnnVars vars = attach(tape, p, false);
  DecisionVars dec =
      decide(tape, ctx, graph_shift_operator(channel, p.arch.normalize_gso),
             tape.constant(features), vars, p.arch, a0);
  return extract_decision(ctx, dec, 0);
}

Tensor dual_features(const Tensor& a0, const Tensor& mu, std::size_t flows) {
  const std::size_t n = a0.dim(0);
  const std::size_t signals = a0.dim(1);
  if (mu.shape() != Shape{n, flows} || flows == 0 || signals % flows != 0) {
    throw ContractError("features: dual shape " + shape_string(mu.shape()) +
                        " does not match arrivals " + shape_string(a0.shape()));
  }
  Tensor x({n, signals, 2});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < signals; ++s) {
      x(i, s, 0) = a0(i, s);
      x(i, s, 1) = mu(i, s % flows);
    }
  return x;
}

}  // namespace oproute
