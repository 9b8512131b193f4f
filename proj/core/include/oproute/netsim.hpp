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

// Fluid queue simulation. Node-by-flow quantities are (n, F) tensors and the
// keep decision is (F, n, n) with keep(k, i, j) the probability that receiver
// i keeps a flow-k packet overheard from sender j.

#ifndef OPROUTE_NETSIM_HPP_
#define OPROUTE_NETSIM_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oproute/tensor.hpp"
#include "oproute/topology.hpp"

namespace oproute {

using Rng = std::mt19937_64;

struct QueueState {
  Tensor q;  // (n, F)

  static QueueState zeros(std::size_t n, std::size_t flows) {
    return QueueState{Tensor({n, flows})};
  }
};

struct RoutingDecision {
  Tensor transmit;  // (n, F)
  Tensor keep;      // (F, n, n)
  Tensor packets;   // (n, F)

  // Checks shapes, ranges, the per-node transmit budget, the keep mask and,
  // when a0 is given, a >= a0. Throws ContractError naming the violation.
  void validate(const ChannelMatrix& channel, const Tensor* a0 = nullptr,
                double tol = 1e-12) const;
};

struct TrajectoryStep {
  Tensor a0;        // arrivals drawn at t
  Tensor transmit;  // decision at t
  Tensor packets;
  Tensor received;  // sum_j T_j R_ij K_ij a0_j at t
  Tensor q;         // queues after the update at t
  Tensor slack;     // constraint slack at t, zero at destinations
};

struct Trajectory {
  std::vector<std::size_t> destination;
  std::vector<TrajectoryStep> steps;

  std::size_t horizon() const noexcept { return steps.size(); }
  // Mean queue over non-destination entries at each step.
  std::vector<double> mean_queue() const;
  // Time average over all steps of the slack.
  Tensor mean_slack() const;
};

Tensor sample_arrivals(const FlowSpec& spec, Rng& rng);

// Random multiplicative perturbation of existing links, clamped to [0, 1].
ChannelMatrix jitter_channel(const ChannelMatrix& channel, double sigma, Rng& rng);

// sum_j T_j^k R_ij K_ij^k v_j^k, (n, F).
Tensor neighbor_inflow(const Tensor& transmit, const Tensor& keep,
                       const ChannelMatrix& channel, const Tensor& v);

QueueState step_queues(const QueueState& q, const Tensor& a0,
                       const RoutingDecision& dec, const ChannelMatrix& channel,
                       const Topology& topo, const FlowSpec& spec);

// T C - a - sum_j T_j R_ij K_ij a_j for every entry.
Tensor constraint_slack(const RoutingDecision& dec, const ChannelMatrix& channel,
                        const Topology& topo);
// Same with each flow's destination entry set to 0.
Tensor constraint_slack(const RoutingDecision& dec, const ChannelMatrix& channel,
                        const Topology& topo, const FlowSpec& spec);

// sum over flows and non-destination nodes of log of the time-averaged a.
double utility(const Trajectory& traj);
// Same for a single time-averaged (n, F) packet matrix.
double utility_of_mean(const Tensor& mean_packets,
                       const std::vector<std::size_t>& destination);

// Least-squares slope of the mean queue over the last `window` steps.
double queue_growth_rate(const Trajectory& traj, std::size_t window);
double least_squares_slope(const std::vector<double>& y);

using Policy = std::function<RoutingDecision(std::size_t t, const Tensor& a0,
                                             const QueueState& q)>;

// Runs `policy` for `horizon` steps from empty queues on a static channel.
Trajectory simulate(const Topology& topo, const ChannelMatrix& channel,
                    const FlowSpec& spec, std::size_t horizon, Rng& rng,
                    const Policy& policy);

// Columns t,node,flow,q,a0,a,T,slack.
std::string trajectory_csv(const Trajectory& traj);
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace oproute

#endif  // OPROUTE_NETSIM_HPP_
