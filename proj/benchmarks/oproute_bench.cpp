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

// Microbenchmarks of the hot paths. Sizes are node counts.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "oproute/autodiff.hpp"
#include "oproute/baselines.hpp"
#include "oproute/gnn.hpp"
#include "oproute/lagrangian.hpp"
#include "oproute/netsim.hpp"
#include "oproute/state_aug.hpp"
#include "oproute/topology.hpp"
#include "oproute/unparam.hpp"

namespace oproute {
namespace {

constexpr std::size_t kFlows = 4;

struct Net {
  Topology topo;
  ChannelMatrix channel;
  FlowSpec spec;
};

Net make_net(std::size_t n) {
  Net net;
  net.topo = generate_knn(n, 4, 7);
  net.channel = channel_from_distance(net.topo);
  net.spec = make_flows(n, kFlows, 18.0, 8, ArrivalLaw::kExponential, 0.8);
  return net;
}

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = u(rng);
  return t;
}

void BM_MatmulBackward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({n, kFlows, 16}, 1), b = random_tensor({16, 8}, 2);
  for (auto _ : state) {
    ad::Tape tape;
    ad::Var x = tape.leaf(a), w = tape.leaf(b);
    ad::Gradients g = tape.backward(ad::sum(ad::tanh(ad::matmul(x, w))));
    benchmark::DoNotOptimize(g[w]);
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(10)->Arg(50)->Arg(100);

void BM_MaskedSoftmaxBackward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Net net = make_net(n);
  const Tensor logits = random_tensor({kFlows, n, n}, 3);
  for (auto _ : state) {
    ad::Tape tape;
    ad::Var x = tape.leaf(logits);
    ad::Gradients g = tape.backward(ad::squared_norm(ad::masked_row_softmax(x, net.channel.probs)));
    benchmark::DoNotOptimize(g[x]);
  }
}
BENCHMARK(BM_MaskedSoftmaxBackward)->Arg(10)->Arg(50)->Arg(100);

void BM_Decide(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Net net = make_net(n);
  const GnnParams p = init_params(GnnArchitecture{}, 1);
  Rng rng(1);
  const Tensor a0 = sample_arrivals(net.spec, rng);
  const Tensor x = dual_features(a0, Tensor({n, kFlows}, 2.0), kFlows).reshaped({n, kFlows, 2});
  for (auto _ : state) benchmark::DoNotOptimize(decide(net.channel, net.topo, x, p, net.spec, a0));
}
BENCHMARK(BM_Decide)->Arg(10)->Arg(50)->Arg(100);

void BM_QueueStep(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Net net = make_net(n);
  const GnnParams p = init_params(GnnArchitecture{}, 1);
  Rng rng(1);
  const Tensor a0 = sample_arrivals(net.spec, rng);
  const Tensor x = dual_features(a0, Tensor({n, kFlows}, 2.0), kFlows).reshaped({n, kFlows, 2});
  const RoutingDecision dec = decide(net.channel, net.topo, x, p, net.spec, a0);
  QueueState q = QueueState::zeros(n, kFlows);
  for (auto _ : state) {
    q = step_queues(q, a0, dec, net.channel, net.topo, net.spec);
    benchmark::DoNotOptimize(q.q);
  }
}
BENCHMARK(BM_QueueStep)->Arg(10)->Arg(50)->Arg(100);

void BM_Execute(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Net net = make_net(n);
  const GnnParams p = init_params(GnnArchitecture{}, 1);
  for (auto _ : state) {
    Rng rng(1);
    benchmark::DoNotOptimize(execute(p, net.topo, net.channel, net.spec, ExecConfig{}, rng));
  }
}
BENCHMARK(BM_Execute)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_ExorRun(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Net net = make_net(n);
  for (auto _ : state) {
    Rng rng(1);
    benchmark::DoNotOptimize(run_exor(net.topo, net.channel, net.spec, 100, rng));
  }
}
BENCHMARK(BM_ExorRun)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_BatchGradient(benchmark::State& state) {
  TrainConfig cfg;
  cfg.nodes = static_cast<std::size_t>(state.range(0));
  cfg.samples = 4;
  cfg.batch = 1;
  const auto batch = draw_batch(cfg, knn_sampler(cfg), 0);
  const GnnParams p = init_params(cfg.arch, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(evaluate_batch(p, batch, cfg.horizon, cfg.rho, true));
}
BENCHMARK(BM_BatchGradient)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_DualDescent(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Net net = make_net(n);
  const UnparamProblem problem =
      make_problem(net.topo, kDefaultCutoff, make_flows(n, kFlows, 18.0, 9, ArrivalLaw::kConstant));
  for (auto _ : state) benchmark::DoNotOptimize(dd_solve(problem, DdConfig{}));
}
BENCHMARK(BM_DualDescent)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace oproute

BENCHMARK_MAIN();
