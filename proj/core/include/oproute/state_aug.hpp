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

// State-augmented training and execution of the GNN routing policy.

#ifndef OPROUTE_STATE_AUG_HPP_
#define OPROUTE_STATE_AUG_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oproute/adam.hpp"
#include "oproute/gnn.hpp"
#include "oproute/netsim.hpp"
#include "oproute/topology.hpp"

namespace oproute {

struct DualState {
  Tensor mu;               // (n, F)
  std::size_t period = 5;  // T_0
  double rate = 0.1;       // gamma_mu

  // mu <- [mu - rate * window_slack]^+, destinations kept at 0.
  void update(const Tensor& window_slack, const std::vector<std::size_t>& destination);
};

// U + sum mu * s - (rho / 2) * sum min(s, 0)^2 with s the time-averaged slack.
double augmented_lagrangian(const Trajectory& traj, const Tensor& mu, double rho);

struct TrainingSample {
  Topology topo;
  ChannelMatrix channel;
  FlowSpec spec;
};

// Returns the network for one batch element given its private random state.
using TopologySampler = std::function<TrainingSample(Rng& rng)>;

struct TrainConfig {
  std::size_t nodes = 10;
  std::size_t flows = 4;
  std::size_t knn = 4;
  double cutoff = kDefaultCutoff;
  double capacity = kDefaultCapacity;
  double arrival_mean = 18.0;
  double arrival_spread = 0.8;  // see make_flows
  ArrivalLaw law = ArrivalLaw::kExponential;
  std::size_t samples = 128;  // distinct training networks

  std::size_t horizon = 100;
  std::size_t period = 5;
  std::size_t batch = 16;
  std::size_t epochs = 30;
  double lr = 0.05;
  double rho = 3.0;
  double rho_decay = 0.98;  // per epoch
  double mu_low = 1.0;
  double mu_high = 5.0;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: hardware concurrency
  GnnArchitecture arch;

  // ADAM steps per epoch: one pass over `samples` networks in batches.
  std::size_t batches_per_epoch() const;
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Uniform over cfg.samples k nearest neighbor networks fixed by cfg.seed,
// each with its own random destinations.
TopologySampler knn_sampler(const TrainConfig& cfg);

struct BatchElement {
  TrainingSample sample;
  Tensor mu;  // (n, F)
  Tensor a0;  // (n, S) arrivals over the horizon
};

std::vector<BatchElement> draw_batch(const TrainConfig& cfg, const TopologySampler& sampler,
                                     std::size_t epoch, std::size_t step = 0);

struct BatchEvaluation {
  double lagrangian = 0.0;  // batch means
  double utility = 0.0;
  double mean_violation = 0.0;
  std::vector<Tensor> grads;  // batch-mean gradient in GnnParams::flatten() order
};

BatchEvaluation evaluate_batch(const GnnParams& params, const std::vector<BatchElement>& batch,
                               std::size_t horizon, double rho, bool with_grads,
                               std::size_t threads = 1);

struct TrainRecord {
  std::size_t epoch = 0;
  double lagrangian = 0.0;
  double utility = 0.0;
  double mean_violation = 0.0;
};

struct TrainResult {
  GnnParams params;
  std::vector<TrainRecord> log;
};

TrainResult train(const TrainConfig& cfg, const TopologySampler& sampler,
                  std::optional<GnnParams> init = std::nullopt);

// Columns epoch,lagrangian,utility,mean_violation.
std::string train_log_csv(const std::vector<TrainRecord>& log);

struct ExecConfig {
  std::size_t horizon = 100;
  std::size_t period = 5;
  double dual_rate = 0.1;
  double jitter = 0.0;  // per-step multiplicative channel noise
  bool keep_decisions = false;

  bool operator==(const ExecConfig&) const = default;
};

struct ExecResult {
  Trajectory traj;
  std::vector<RoutingDecision> decisions;  // only with keep_decisions
  std::vector<Tensor> mu;                  // dual in force at each step
  std::vector<Tensor> window_slack;        // one per dual update
};

ExecResult execute(const GnnParams& params, const Topology& topo, const ChannelMatrix& channel,
                   const FlowSpec& spec, const ExecConfig& cfg, Rng& rng);

// Columns t,utility_so_far,mean_queue,mu_norm.
std::string execution_log_csv(const ExecResult& res);
// Columns t,node,flow,mu,q.
std::string dual_trace_csv(const ExecResult& res);

}  // namespace oproute

#endif  // OPROUTE_STATE_AUG_HPP_
