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

// Differentiable routing heads, constraint slack and Lagrangians shared by
// the GNN policy and the unparameterized solvers.
//
// A rollout of `steps` time steps over F flows is laid out as S = steps * F
// signals with signal index s = t * F + k. Node quantities are (n, S) and
// keep matrices are (S, n, n).

#ifndef OPROUTE_LAGRANGIAN_HPP_
#define OPROUTE_LAGRANGIAN_HPP_

#include <cstddef>

#include "oproute/autodiff.hpp"
#include "oproute/netsim.hpp"
#include "oproute/topology.hpp"

namespace oproute {

struct RoutingContext {
  std::size_t nodes = 0;
  std::size_t steps = 0;
  std::size_t flows = 0;
  Tensor probs;     // (n, n)
  Tensor capacity;  // (n, S), C_i in every column
  Tensor mask;      // (n, S), 0 at each flow's destination
  Tensor unmask;    // 1 - mask

  static RoutingContext make(const ChannelMatrix& channel, const Topology& topo,
                             const FlowSpec& spec, std::size_t steps);
  std::size_t signals() const noexcept { return steps * flows; }
};

struct DecisionVars {
  ad::Var transmit;  // (n, S)
  ad::Var keep;      // (S, n, n)
  ad::Var packets;   // (n, S)
};

// keep_logits (S, n, n), transmit_logits (n, S), packet_logits (n, S) and
// arrivals a0 (n, S). Keep is a softmax over each receiver's senders with a
// positive link; transmit is a softmax over the node's flows plus an idle
// slot with destination entries excluded; packets are a0 + relu(logit) away
// from destinations.
DecisionVars routing_heads(ad::Tape& tape, const RoutingContext& ctx,
                           const ad::Var& keep_logits, const ad::Var& transmit_logits,
                           const ad::Var& packet_logits, const Tensor& a0);

// T C - a - sum_j T_j R_ij K_ij a_j, zero at destinations. (n, S).
ad::Var routing_slack(ad::Tape& tape, const RoutingContext& ctx,
                      const DecisionVars& dec);

// (n, S) -> (n, F) time average.
ad::Var time_mean(const RoutingContext& ctx, const ad::Var& v);

// Sum of log over non-destination entries of an (n, F) tensor.
ad::Var log_utility(ad::Tape& tape, const RoutingContext& ctx, const ad::Var& mean_packets);

// U + sum mu * s - (rho / 2) * sum min(s, 0)^2 with s the (n, F) mean slack.
ad::Var penalized_lagrangian(ad::Tape& tape, const ad::Var& utility,
                             const ad::Var& mean_slack, const Tensor& mu, double rho);

// U + sum mu * r - (rho / 2) * sum r^2 with r = g - z and z the maximizing
// non-negative slack variable, which gives r = min(g, mu / rho).
ad::Var multiplier_lagrangian(ad::Tape& tape, const ad::Var& utility,
                              const ad::Var& slack, const Tensor& mu, double rho);

// Plain decision tensors for time step t of a rollout.
RoutingDecision extract_decision(const RoutingContext& ctx, const DecisionVars& dec,
                                 std::size_t t);

// Builds an (n, S) tensor from per-step (n, F) tensors.
Tensor stack_steps(const std::vector<Tensor>& per_step);

}  // namespace oproute

#endif  // OPROUTE_LAGRANGIAN_HPP_
