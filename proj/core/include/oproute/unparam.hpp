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

// Single-step routing problems solved directly over the decision variables
// by dual descent and by the method of multipliers.

#ifndef OPROUTE_UNPARAM_HPP_
#define OPROUTE_UNPARAM_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "oproute/netsim.hpp"
#include "oproute/topology.hpp"

namespace oproute {

struct UnparamProblem {
  Topology topo;
  ChannelMatrix channel;
  FlowSpec spec;
  Tensor a0;  // (n, F) arrivals of the single step
};

// Two nodes, one flow to node 1, C = 1, a0 = 0.2 at node 0, R = 0.8.
UnparamProblem toy_problem();
UnparamProblem make_problem(Topology topo, double cutoff, FlowSpec spec);

// Unconstrained logits mapped through the routing heads.
struct PrimalVars {
  Tensor keep_logits;      // (F, n, n)
  Tensor transmit_logits;  // (n, F)
  Tensor packet_logits;    // (n, F)

  static PrimalVars initial(const UnparamProblem& problem, double packet_logit = 1.0);
  RoutingDecision decision(const UnparamProblem& problem) const;
};

struct IterMetrics {
  std::size_t iter = 0;
  double utility = 0.0;
  double lagrangian = 0.0;
  double max_violation = 0.0;   // max over entries of max(0, -slack)
  double mean_violation = 0.0;  // mean of the same over non-destination entries
  double queue_proxy = 0.0;     // mean one-step queue growth under a0
  double rho = 0.0;
  double mu_norm = 0.0;
};

struct DdConfig {
  std::size_t iters = 30;
  double primal_rate = 1.0;
  double dual_rate = 0.1;
  double packet_logit = 1.0;

  bool operator==(const DdConfig&) const = default;
};

struct MomConfig {
  std::size_t outer_iters = 30;
  std::size_t inner_steps = 50;
  double rho0 = 1.0;
  double decay = 0.98;
  double primal_rate = 1.0;
  std::size_t max_halvings = 30;
  double packet_logit = 1.0;

  bool operator==(const MomConfig&) const = default;
};

struct DdResult {
  PrimalVars primal;
  Tensor mu;
  std::vector<IterMetrics> history;
};

struct MomResult {
  PrimalVars primal;
  Tensor mu;
  Tensor z;
  double rho = 0.0;
  std::vector<IterMetrics> history;
  // Per outer iteration: the inner objective after each accepted step, with
  // the starting value first, and the norm of the residual g - z.
  std::vector<std::vector<double>> inner_values;
  std::vector<double> residual_norms;
};

DdResult dd_solve(const UnparamProblem& problem, const DdConfig& cfg);
MomResult mom_solve(const UnparamProblem& problem, const MomConfig& cfg);

// Metrics of a decision under the problem; mu and rho are copied through.
IterMetrics evaluate(const UnparamProblem& problem, const RoutingDecision& dec,
                     const Tensor& mu, double rho, std::size_t iter);

// Columns iter,utility,max_violation,mean_queue_proxy,rho,mu_norm.
std::string iter_metrics_csv(const std::vector<IterMetrics>& history);

}  // namespace oproute

#endif  // OPROUTE_UNPARAM_HPP_
