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

// ExOR-style priority forwarding in the fluid model.

#ifndef OPROUTE_BASELINES_HPP_
#define OPROUTE_BASELINES_HPP_

#include <cstddef>
#include <limits>
#include <vector>

#include "oproute/netsim.hpp"
#include "oproute/topology.hpp"

namespace oproute {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// cost[k][i]: expected transmission count from i to flow k's destination
// with link weight 1 / R(receiver, sender). kUnreachable when no path exists.
using CostTable = std::vector<std::vector<double>>;

CostTable exor_costs(const ChannelMatrix& channel, const FlowSpec& spec);

// candidates[k][j]: receivers i with R(i, j) > 0 and cost below j's, best
// first, ties to the lower id.
struct ForwarderList {
  std::vector<std::vector<std::vector<std::size_t>>> candidates;
};

ForwarderList exor_forwarders(const CostTable& costs, const ChannelMatrix& channel);

// Transmit shares 1 / |active flows| among flows with a queue or arrivals;
// each sender's packets are kept only by its best forwarder; a = a0.
RoutingDecision exor_decide(const CostTable& costs, const ChannelMatrix& channel,
                            const FlowSpec& spec, const Tensor& a0, const QueueState& q);

Trajectory run_exor(const Topology& topo, const ChannelMatrix& channel,
                    const FlowSpec& spec, std::size_t horizon, Rng& rng);

}  // namespace oproute

#endif  // OPROUTE_BASELINES_HPP_
