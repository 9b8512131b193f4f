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

// Graph filter bank network and its routing heads.

#ifndef OPROUTE_GNN_HPP_
#define OPROUTE_GNN_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "oproute/autodiff.hpp"
#include "oproute/lagrangian.hpp"
#include "oproute/netsim.hpp"
#include "oproute/tensor.hpp"
#include "oproute/topology.hpp"

namespace oproute {

enum class Activation { kRelu, kTanh, kIdentity };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

struct GnnArchitecture {
  // Feature widths F_0 .. F_L; layer l maps widths[l-1] to widths[l].
  std::vector<std::size_t> widths{2, 16, 8};
  // Filter taps per layer, one entry per layer.
  std::vector<std::size_t> taps{2, 2};
  Activation activation = Activation::kRelu;
  // Use D^-1/2 R D^-1/2 instead of R as the shift operator.
  bool normalize_gso = false;

  std::size_t layers() const noexcept { return taps.size(); }
  std::size_t out_width() const { return widths.back(); }
  void validate() const;
  bool operator==(const GnnArchitecture&) const = default;
};

struct GnnParams {
  GnnArchitecture arch;
  std::vector<Tensor> filters;  // layer l: (taps[l], widths[l], widths[l+1])
  Tensor w_r;                   // (F_L, F_L)
  Tensor w_s;                   // (F_L)
  Tensor w_a;                   // (F_L)

  // filters..., w_r, w_s, w_a
  std::vector<Tensor> flatten() const;
  void assign(std::vector<Tensor> flat);
  std::vector<std::string> names() const;
  // Checks tensor shapes against arch.
  void validate() const;
  bool operator==(const GnnParams&) const = default;
};

GnnParams init_params(const GnnArchitecture& arch, std::uint64_t seed);
GnnParams zero_params(const GnnArchitecture& arch);

Tensor graph_shift_operator(const ChannelMatrix& channel, bool normalize);

// sum_k S^k z h_k by repeated shifts. z is (n, ..., F_in).
Tensor graph_filter(const Tensor& gso, const Tensor& z, const Tensor& taps);
// x is (n, F_0) or (n, S, F_0).
Tensor gnn_forward(const ChannelMatrix& channel, const Tensor& x, const GnnParams& p);

// features (n, F, F_0) per flow; a0 (n, F).
RoutingDecision decide(const ChannelMatrix& channel, const Topology& topo,
                       const Tensor& features, const GnnParams& p,
                       const FlowSpec& spec, const Tensor& a0);

// ---- taped variants -----------------------------------------------------------

struct GnnVars {
  std::vector<ad::Var> filters;
  ad::Var w_r, w_s, w_a;

  std::vector<ad::Var> all() const;
};

GnnVars attach(ad::Tape& tape, const GnnParams& p, bool trainable);

ad::Var graph_filter(const Tensor& gso, const ad::Var& z, const ad::Var& taps);
ad::Var gnn_forward(const Tensor& gso, const ad::Var& x, const GnnVars& vars,
                    const GnnArchitecture& arch);

// x (n, S, F_0) and a0 (n, S) over a rollout described by ctx.
DecisionVars decide(ad::Tape& tape, const RoutingContext& ctx, const Tensor& gso,
                    const ad::Var& x, const GnnVars& vars, const GnnArchitecture& arch,
                    const Tensor& a0);

// Node features (n, S, 2) with columns (a0, mu) from a0 (n, S) and mu (n, F).
Tensor dual_features(const Tensor& a0, const Tensor& mu, std::size_t flows);

}  // namespace oproute

#endif  // OPROUTE_GNN_HPP_
