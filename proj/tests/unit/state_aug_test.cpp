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

#include "oproute/state_aug.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oproute/errors.hpp"

namespace oproute {
namespace {

Trajectory random_trajectory(std::size_t n, std::size_t f, std::size_t steps,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pk(0.5, 6.0), sl(-4.0, 4.0);
  Trajectory traj;
  for (std::size_t k = 0; k < f; ++k) traj.destination.push_back(k);
  for (std::size_t t = 0; t < steps; ++t) {
    TrajectoryStep s;
    s.packets = Tensor({n, f});
    s.slack = Tensor({n, f});
    s.q = Tensor({n, f});
    for (double& v : s.packets.data()) v = pk(rng);
    for (double& v : s.slack.data()) v = sl(rng);
    for (std::size_t k = 0; k < f; ++k) s.slack(k, k) = 0.0;
    traj.steps.push_back(s);
  }
  return traj;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.nodes = 6;
  cfg.flows = 2;
  cfg.knn = 3;
  cfg.samples = 4;
  cfg.horizon = 10;
  cfg.batch = 2;
  cfg.epochs = 2;
  cfg.threads = 1;
  return cfg;
}

TEST(AugmentedLagrangian, NoDualNoPenaltyIsUtility) {
  std::mt19937_64 rng(1);
  const Trajectory traj = random_trajectory(5, 2, 6, rng);
  EXPECT_EQ(augmented_lagrangian(traj, Tensor({5, 2}), 0.0), utility(traj));
}

TEST(AugmentedLagrangian, ZeroSlackIsUtilityForAnyPenalty) {
  std::mt19937_64 rng(2);
  Trajectory traj = random_trajectory(5, 2, 6, rng);
  for (auto& s : traj.steps) s.slack.fill(0.0);
  const Tensor mu({5, 2}, 3.0);
  EXPECT_DOUBLE_EQ(augmented_lagrangian(traj, mu, 7.5), utility(traj));
}

TEST(AugmentedLagrangian, MatchesScalarRecomputation) {
  std::mt19937_64 rng(3);
  const std::size_t n = 4, f = 2, steps = 5;
  const Trajectory traj = random_trajectory(n, f, steps, rng);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  Tensor mu({n, f});
  for (double& v : mu.data()) v = u(rng);
  const double rho = 0.7;
  double expect = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < f; ++k) {
      double pk = 0.0, sl = 0.0;
      for (const auto& s : traj.steps) {
        pk += s.packets(i, k);
        sl += s.slack(i, k);
      }
      pk /= steps;
      sl /= steps;
      if (i != traj.destination[k]) expect += std::log(pk);
      expect += mu(i, k) * sl;
      if (sl < 0.0) expect -= 0.5 * rho * sl * sl;
    }
  EXPECT_NEAR(augmented_lagrangian(traj, mu, rho), expect, 1e-12);
}

TEST(DualState, NonNegativeSlackNeverRaisesDual) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  DualState dual{Tensor({5, 2}), 5, 0.4};
  for (double& v : dual.mu.data()) v = u(rng);
  const Tensor before = dual.mu;
  Tensor slack({5, 2});
  for (double& v : slack.data()) v = u(rng);
  dual.update(slack, {0, 1});
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_LE(dual.mu[i], before[i]);
    EXPECT_GE(dual.mu[i], 0.0);
  }
}

TEST(DualState, NegativeSlackStrictlyRaisesDual) {
  DualState dual{Tensor({3, 1}), 5, 0.1};
  Tensor slack({3, 1}, -2.0);
  dual.update(slack, {0});
  EXPECT_EQ(dual.mu(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(dual.mu(1, 0), 0.2);
  EXPECT_DOUBLE_EQ(dual.mu(2, 0), 0.2);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  TrainConfig cfg = small_config();
  cfg.epochs = 0;
  const GnnParams init = init_params(cfg.arch, 77);
  const TrainResult r = train(cfg, knn_sampler(cfg), init);
  EXPECT_EQ(r.params, init);
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, SmallAscentStepDoesNotLowerTheBatchLagrangian) {
  TrainConfig cfg = small_config();
  cfg.batch = 1;
  cfg.samples = 1;
  cfg.epochs = 1;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    cfg.seed = seed;
    for (double lr : {1e-3, 1e-4}) {
      cfg.lr = lr;
      const TopologySampler sampler = knn_sampler(cfg);
      const auto batch = draw_batch(cfg, sampler, 0, 0);
      const GnnParams init = init_params(cfg.arch, cfg.seed);
      const double before = evaluate_batch(init, batch, cfg.horizon, cfg.rho, false).lagrangian;
      const TrainResult r = train(cfg, sampler);
      const double after = evaluate_batch(r.params, batch, cfg.horizon, cfg.rho, false).lagrangian;
      EXPECT_GE(after, before) << "seed " << seed << " lr " << lr;
    }
  }
}

TEST(Train, ThreadCountDoesNotChangeTheResult) {
  TrainConfig cfg = small_config();
  cfg.threads = 1;
  const TrainResult one = train(cfg, knn_sampler(cfg));
  cfg.threads = 3;
  const TrainResult three = train(cfg, knn_sampler(cfg));
  EXPECT_EQ(one.params, three.params);
}

TEST(Train, BatchDrawsAreReproducible) {
  const TrainConfig cfg = small_config();
  const TopologySampler sampler = knn_sampler(cfg);
  const auto a = draw_batch(cfg, sampler, 3, 1);
  const auto b = draw_batch(cfg, sampler, 3, 1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mu, b[i].mu);
    EXPECT_EQ(a[i].a0, b[i].a0);
    for (std::size_t k = 0; k < cfg.flows; ++k)
      EXPECT_EQ(a[i].mu(a[i].sample.spec.destination[k], k), 0.0);
    for (double v : a[i].mu.data()) EXPECT_LE(v, cfg.mu_high);
  }
}

TEST(Train, InvalidConfigIsRejected) {
  TrainConfig cfg = small_config();
  cfg.batch = 0;
  EXPECT_THROW(cfg.validate(), InvalidParameter);
  cfg = small_config();
  cfg.arch.widths = {3, 16, 8};
  EXPECT_THROW(cfg.validate(), InvalidParameter);
}

struct Scenario {
  Topology topo = generate_knn(8, 3, 12);
  ChannelMatrix ch = channel_from_distance(topo);
  FlowSpec spec = make_flows(8, 2, 12.0, 13);
  GnnParams params = init_params(GnnArchitecture{}, 14);
};

TEST(Execute, FixedSeedsReproduceBitForBit) {
  const Scenario s;
  ExecConfig cfg;
  cfg.horizon = 30;
  Rng r1(8), r2(8);
  const ExecResult a = execute(s.params, s.topo, s.ch, s.spec, cfg, r1);
  const ExecResult b = execute(s.params, s.topo, s.ch, s.spec, cfg, r2);
  EXPECT_EQ(trajectory_csv(a.traj), trajectory_csv(b.traj));
  EXPECT_EQ(dual_trace_csv(a), dual_trace_csv(b));
}

TEST(Execute, ZeroDualRateKeepsDualAtZero) {
  const Scenario s;
  ExecConfig cfg;
  cfg.horizon = 25;
  cfg.dual_rate = 0.0;
  Rng rng(3);
  const ExecResult r = execute(s.params, s.topo, s.ch, s.spec, cfg, rng);
  for (const Tensor& mu : r.mu) EXPECT_EQ(mu.max_abs(), 0.0);
}

TEST(Execute, DualChangesOnlyAtWindowEnds) {
  const Scenario s;
  ExecConfig cfg;
  cfg.horizon = 23;
  Rng rng(4);
  const ExecResult r = execute(s.params, s.topo, s.ch, s.spec, cfg, rng);
  EXPECT_EQ(r.window_slack.size(), 4u);
  for (std::size_t t = 1; t < r.mu.size(); ++t)
    if (t % cfg.period != 0) EXPECT_EQ(r.mu[t], r.mu[t - 1]) << t;
  for (std::size_t m = 0; m < r.window_slack.size(); ++m) {
    const Tensor& before = r.mu[m * cfg.period];
    const Tensor& after = r.mu[(m + 1) * cfg.period];
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (r.window_slack[m][i] >= 0.0) EXPECT_LE(after[i], before[i]);
      EXPECT_NEAR(after[i], std::max(0.0, before[i] - cfg.dual_rate * r.window_slack[m][i]),
                  1e-12);
    }
  }
}

TEST(Execute, WrongInputWidthIsContractError) {
  Scenario s;
  GnnArchitecture arch;
  arch.widths = {3, 4};
  arch.taps = {1};
  Rng rng(1);
  EXPECT_THROW(execute(init_params(arch, 1), s.topo, s.ch, s.spec, ExecConfig{}, rng),
               ContractError);
}

TEST(Execute, LogsHaveTheDocumentedColumns) {
  const Scenario s;
  ExecConfig cfg;
  cfg.horizon = 10;
  Rng rng(5);
  const ExecResult r = execute(s.params, s.topo, s.ch, s.spec, cfg, rng);
  const std::string log = execution_log_csv(r);
  EXPECT_EQ(log.substr(0, log.find('\n')), "t,utility_so_far,mean_queue,mu_norm");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 11);
  const std::string train_log = train_log_csv({{0, 1.0, 2.0, 3.0}});
  EXPECT_EQ(train_log, "epoch,lagrangian,utility,mean_violation\n0,1,2,3\n");
}

}  // namespace
}  // namespace oproute
