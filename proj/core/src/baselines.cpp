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

#include "oproute/baselines.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <utility>

#include "oproute/errors.hpp"

namespace oproute {

CostTable exor_costs(const ChannelMatrix& channel, const FlowSpec& spec) {
  const std::size_t n = channel.size();
  spec.validate(n);
  CostTable table(spec.flows(), std::vector<double>(n, kUnreachable));
  using Item = std::pair<double, std::size_t>;
  for (std::size_t k = 0; k < spec.flows(); ++k) {
    std::vector<double>& cost = table[k];
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    cost[spec.destination[k]] = 0.0;
    open.emplace(0.0, spec.destination[k]);
    while (!open.empty()) {
      const auto [c, i] = open.top();
      open.pop();
      if (c > cost[i]) continue;
      // Senders j whose packets i can decode.
      for (std::size_t j = 0; j < n; ++j) {
        const double r = channel.probs(i, j);
        if (r <= 0.0) continue;
        const double next = c + 1.0 / r;
        if (next < cost[j]) {
          cost[j] = next;
          open.emplace(next, j);
        }
      }
    }
  }
  return table;
}

ForwarderList exor_forwarders(const CostTable& costs, const ChannelMatrix& channel) {
  const std::size_t n = channel.size();
  ForwarderList list;
  list.candidates.resize(costs.size());
  for (std::size_t k = 0; k < costs.size(); ++k) {
    const std::vector<double>& cost = costs[k];
    if (cost.size() != n) throw ContractError("exor: cost table size mismatch");
    list.candidates[k].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::size_t>& cand = list.candidates[k][j];
      for (std::size_t i = 0; i < n; ++i)
        if (channel.probs(i, j) > 0.0 && cost[i] < cost[j]) cand.push_back(i);
      std::stable_sort(cand.begin(), cand.end(),
                       [&](std::size_t a, std::size_t b) { return cost[a] < cost[b]; });
    }
  }
  return list;
}

RoutingDecision exor_decide(const CostTable& costs, const ChannelMatrix& channel,
                            const FlowSpec& spec, const Tensor& a0, const QueueState& q) {
  const std::size_t n = channel.size();
  const std::size_t flows = spec.flows();
  if (a0.shape() != Shape{n, flows} || q.q.shape() != Shape{n, flows}) {
    throw ContractError("exor: arrivals or queues have the wrong shape");
  }
  const ForwarderList fwd = exor_forwarders(costs, channel);
  RoutingDecision dec{Tensor({n, flows}), Tensor({flows, n, n}), a0};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < flows; ++k)
      if (i != spec.destination[k] && (q.q(i, k) > 0.0 || a0(i, k) > 0.0))
        active.push_back(k);
    for (std::size_t k : active)
      dec.transmit(i, k) = 1.0 / static_cast<double>(active.size());
  }
  for (std::size_t k = 0; k < flows; ++k)
    for (std::size_t j = 0; j < n; ++j) {
      const auto& cand = fwd.candidates[k][j];
      if (!cand.empty()) dec.keep(k, cand.front(), j) = 1.0;
    }
  return dec;
}

Trajectory run_exor(const Topology& topo, const ChannelMatrix& channel,
                    const FlowSpec& spec, std::size_t horizon, Rng& rng) {
  const CostTable costs = exor_costs(channel, spec);
  return simulate(topo, channel, spec, horizon, rng,
                  [&](std::size_t, const Tensor& a0, const QueueState& q) {
                    return exor_decide(costs, channel, spec, a0, q);
                  });
}

}  // namespace oproute
