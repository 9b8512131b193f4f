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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "oproute/checkpoint.hpp"
#include "oproute/errors.hpp"

namespace oproute {
namespace {

using testing::random_tensor;

Tensor dense_matmul(const Tensor& a, const Tensor& b) {
  Tensor out({a.dim(0), b.dim(1)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < b.dim(1); ++j)
      for (std::size_t k = 0; k < a.dim(1); ++k) out(i, j) += a(i, k) * b(k, j);
  return out;
}

Tensor tap(const Tensor& taps, std::size_t k) {
  const std::size_t fi = taps.dim(1), fo = taps.dim(2);
  Tensor out({fi, fo});
  for (std::size_t a = 0; a < fi; ++a)
    for (std::size_t b = 0; b < fo; ++b) out(a, b) = taps(k, a, b);
  return out;
}

struct Network {
  Topology topo;
  ChannelMatrix ch;
  FlowSpec spec;
};

Network network(std::size_t n, std::size_t flows, std::uint64_t seed) {
  Network net;
  net.topo = generate_knn(n, std::min<std::size_t>(3, n - 1), seed);
  net.ch = channel_from_distance(net.topo);
  net.spec = make_flows(n, flows, 10.0, seed + 1);
  return net;
}

Tensor features(std::size_t n, std::size_t flows, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 5.0);
  Tensor x({n, flows, 2});
  for (double& v : x.data()) v = u(rng);
  return x;
}

Tensor arrivals(const Tensor& x) {
  Tensor a0({x.dim(0), x.dim(1)});
  for (std::size_t i = 0; i < x.dim(0); ++i)
    for (std::size_t k = 0; k < x.dim(1); ++k) a0(i, k) = x(i, k, 0);
  return a0;
}

TEST(GraphFilter, IdentityTapIsPassthrough) {
  std::mt19937_64 rng(1);
  const Network net = network(6, 1, 1);
  const Tensor z = random_tensor({6, 3}, rng);
  Tensor taps({1, 3, 3});
  for (std::size_t f = 0; f < 3; ++f) taps(0, f, f) = 1.0;
  EXPECT_EQ(graph_filter(net.ch.probs, z, taps), z);
}

TEST(GraphFilter, SecondTapAppliesShiftOnce) {
  std::mt19937_64 rng(2);
  const Network net = network(6, 1, 2);
  const Tensor z = random_tensor({6, 2}, rng);
  Tensor taps({2, 2, 2});
  taps(1, 0, 0) = taps(1, 1, 1) = 1.0;
  const Tensor y = graph_filter(net.ch.probs, z, taps);
  const Tensor expect = dense_matmul(net.ch.probs, z);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], expect[i], 1e-12);
}

TEST(GraphFilter, MatchesDenseMatrixPolynomial) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const Network net = network(6, 1, seed);
    const Tensor z = random_tensor({6, 2}, rng);
    const Tensor taps = random_tensor({3, 2, 4}, rng);
    Tensor power({6, 6});
    for (std::size_t i = 0; i < 6; ++i) power(i, i) = 1.0;
    Tensor expect({6, 4});
    for (std::size_t k = 0; k < 3; ++k) {
      const Tensor term = dense_matmul(dense_matmul(power, z), tap(taps, k));
      for (std::size_t i = 0; i < expect.size(); ++i) expect[i] += term[i];
      power = dense_matmul(power, net.ch.probs);
    }
    const Tensor y = graph_filter(net.ch.probs, z, taps);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], expect[i], 1e-12);
  }
}

TEST(GraphFilter, ShapeMismatchIsContractError) {
  const Network net = network(5, 1, 3);
  EXPECT_THROW(graph_filter(net.ch.probs, Tensor({5, 2}), Tensor({2, 3, 3})), ContractError);
}

TEST(Forward, ZeroInputGivesZeroEmbedding) {
  const Network net = network(7, 1, 4);
  const GnnParams p = init_params(GnnArchitecture{}, 9);
  EXPECT_EQ(gnn_forward(net.ch, Tensor({7, 2}), p).max_abs(), 0.0);
}

TEST(Forward, SingleIdentityLayerIsRelu) {
  std::mt19937_64 rng(5);
  const Network net = network(7, 1, 5);
  GnnArchitecture arch;
  arch.widths = {2, 2};
  arch.taps = {1};
  GnnParams p = zero_params(arch);
  p.filters[0](0, 0, 0) = p.filters[0](0, 1, 1) = 1.0;
  const Tensor x = random_tensor({7, 2}, rng);
  const Tensor y = gnn_forward(net.ch, x, p);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], std::max(0.0, x[i]));
}

TEST(Decide, ZeroPacketHeadKeepsArrivals) {
  std::mt19937_64 rng(6);
  const Network net = network(9, 3, 6);
  GnnParams p = init_params(GnnArchitecture{}, 6);
  p.w_a.fill(0.0);
  const Tensor x = features(9, 3, rng);
  const Tensor a0 = arrivals(x);
  const RoutingDecision d = decide(net.ch, net.topo, x, p, net.spec, a0);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t k = 0; k < 3; ++k)
      if (i != net.spec.destination[k]) EXPECT_EQ(d.packets(i, k), a0(i, k));
}

TEST(Decide, IsolatedReceiverKeepsNothing) {
  Network net = network(6, 2, 7);
  net.topo.positions.push_back({3.0, 3.0});
  net.topo.capacity.push_back(100.0);
  net.ch = channel_from_distance(net.topo);
  net.spec = make_flows(7, 2, 5.0, 1);
  std::mt19937_64 rng(7);
  const Tensor x = features(7, 2, rng);
  const RoutingDecision d =
      decide(net.ch, net.topo, x, init_params(GnnArchitecture{}, 7), net.spec, arrivals(x));
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(d.keep(k, 6, j), 0.0);
}

class RandomParams : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomParams, DecisionsSatisfyConstraintsByConstruction) {
  std::mt19937_64 rng(GetParam());
  const Network net = network(10, 4, GetParam());
  GnnParams p = init_params(GnnArchitecture{}, GetParam());
  for (Tensor& t : p.filters) t = random_tensor(t.shape(), rng, -3.0, 3.0);
  p.w_r = random_tensor(p.w_r.shape(), rng, -3.0, 3.0);
  p.w_s = random_tensor(p.w_s.shape(), rng, -3.0, 3.0);
  p.w_a = random_tensor(p.w_a.shape(), rng, -3.0, 3.0);
  const Tensor x = features(10, 4, rng);
  const Tensor a0 = arrivals(x);
  const RoutingDecision d = decide(net.ch, net.topo, x, p, net.spec, a0);
  d.validate(net.ch, &a0);
  for (std::size_t i = 0; i < 10; ++i) {
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) total += d.transmit(i, k);
    EXPECT_LE(total, 1.0);
    for (std::size_t k = 0; k < 4; ++k) {
      double row = 0.0;
      for (std::size_t j = 0; j < 10; ++j) {
        row += d.keep(k, i, j);
        if (net.ch.probs(i, j) == 0.0) EXPECT_EQ(d.keep(k, i, j), 0.0);
      }
      EXPECT_NEAR(row, 1.0, 1e-12);
    }
  }
}

TEST_P(RandomParams, IdleSlotKeepsPositiveMass) {
  std::mt19937_64 rng(GetParam() + 50);
  const Network net = network(10, 4, GetParam());
  const Tensor x = features(10, 4, rng);
  const RoutingDecision d =
      decide(net.ch, net.topo, x, init_params(GnnArchitecture{}, GetParam()), net.spec,
             arrivals(x));
  for (std::size_t i = 0; i < 10; ++i) {
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) total += d.transmit(i, k);
    EXPECT_LT(total, 1.0);
  }
}

TEST_P(RandomParams, RelabelingNodesPermutesDecisions) {
  std::mt19937_64 rng(GetParam() + 100);
  const std::size_t n = 12, f = 3;
  const Network net = network(n, f, GetParam());
  const GnnParams p = init_params(GnnArchitecture{}, GetParam());
  const Tensor x = features(n, f, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  Network moved = net;
  for (std::size_t i = 0; i < n; ++i) {
    moved.topo.positions[perm[i]] = net.topo.positions[i];
    moved.topo.capacity[perm[i]] = net.topo.capacity[i];
  }
  moved.topo.edges.clear();
  for (const auto& [i, j] : net.topo.edges) moved.topo.edges.emplace_back(perm[i], perm[j]);
  std::sort(moved.topo.edges.begin(), moved.topo.edges.end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) moved.ch.probs(perm[i], perm[j]) = net.ch.probs(i, j);
  for (std::size_t k = 0; k < f; ++k) moved.spec.destination[k] = perm[net.spec.destination[k]];
  Tensor px({n, f, 2});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < f; ++k)
      for (std::size_t c = 0; c < 2; ++c) px(perm[i], k, c) = x(i, k, c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < f; ++k)
      moved.spec.arrival_mean(perm[i], k) = net.spec.arrival_mean(i, k);

  const RoutingDecision d = decide(net.ch, net.topo, x, p, net.spec, arrivals(x));
  const RoutingDecision e = decide(moved.ch, moved.topo, px, p, moved.spec, arrivals(px));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < f; ++k) {
      EXPECT_NEAR(e.transmit(perm[i], k), d.transmit(i, k), 1e-9);
      EXPECT_NEAR(e.packets(perm[i], k), d.packets(i, k), 1e-9);
      for (std::size_t j = 0; j < n; ++j)
        EXPECT_NEAR(e.keep(k, perm[i], perm[j]), d.keep(k, i, j), 1e-9);
    }
}

TEST_P(RandomParams, ParameterGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(GetParam() + 200);
  const std::size_t n = 5, f = 2, steps = 2;
  const Network net = network(n, f, GetParam());
  const RoutingContext ctx = RoutingContext::make(net.ch, net.topo, net.spec, steps);
  GnnArchitecture arch;
  arch.activation = Activation::kTanh;
  arch.widths = {2, 4, 3};
  const GnnParams p = init_params(arch, GetParam());
  const Tensor gso = graph_shift_operator(net.ch, false);
  const Tensor a0 = random_tensor({n, steps * f}, rng, 0.5, 4.0);
  const Tensor mu = random_tensor({n, f}, rng, 1.0, 5.0);
  const Tensor x = dual_features(a0, mu, f);
  const Tensor wt = random_tensor({n, steps * f}, rng);
  const Tensor wk = random_tensor({steps * f, n, n}, rng);
  const testing::LossFn loss = [&](ad::Tape& tape, const std::vector<ad::Var>& v) {
    GnnVars vars;
    vars.filters.assign(v.begin(), v.end() - 3);
    vars.w_r = v[v.size() - 3];
    vars.w_s = v[v.size() - 2];
    vars.w_a = v[v.size() - 1];
    const DecisionVars d = decide(tape, ctx, gso, tape.constant(x), vars, arch, a0);
    return ad::add(ad::add(ad::sum(ad::hadamard(d.transmit, tape.constant(wt))),
                           ad::sum(ad::hadamard(d.keep, tape.constant(wk)))),
                   ad::scale(ad::sum(d.packets), 0.1));
  };
  const testing::GradCheck c = testing::gradcheck(loss, p.flatten());
  EXPECT_LT(c.rel_error, c.tolerance) << "kink margin " << c.kink_margin;
}

TEST_P(RandomParams, TapedDecisionMatchesPlainDecision) {
  std::mt19937_64 rng(GetParam() + 300);
  const std::size_t n = 8, f = 3;
  const Network net = network(n, f, GetParam());
  const GnnParams p = init_params(GnnArchitecture{}, GetParam());
  const Tensor a0 = random_tensor({n, f}, rng, 0.0, 9.0);
  const Tensor mu = random_tensor({n, f}, rng, 0.0, 4.0);
  const Tensor x = dual_features(a0, mu, f);
  const RoutingContext ctx = RoutingContext::make(net.ch, net.topo, net.spec, 1);
  ad::Tape tape;
  const DecisionVars d = decide(tape, ctx, graph_shift_operator(net.ch, false), tape.constant(x),
                                attach(tape, p, false), p.arch, a0);
  const RoutingDecision taped = extract_decision(ctx, d, 0);
  const RoutingDecision plain = decide(net.ch, net.topo, x.reshaped({n, f, 2}), p, net.spec, a0);
  for (std::size_t i = 0; i < taped.transmit.size(); ++i)
    EXPECT_NEAR(taped.transmit[i], plain.transmit[i], 1e-12);
  for (std::size_t i = 0; i < taped.keep.size(); ++i)
    EXPECT_NEAR(taped.keep[i], plain.keep[i], 1e-12);
  for (std::size_t i = 0; i < taped.packets.size(); ++i)
    EXPECT_NEAR(taped.packets[i], plain.packets[i], 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomParams, ::testing::Values(1, 2, 3, 4, 5));

TEST(Params, FlattenAssignRoundTrip) {
  GnnParams p = init_params(GnnArchitecture{}, 3);
  GnnParams q = zero_params(p.arch);
  q.assign(p.flatten());
  EXPECT_EQ(q, p);
  EXPECT_EQ(p.names(), (std::vector<std::string>{"filter0", "filter1", "w_r", "w_s", "w_a"}));
  EXPECT_THROW(q.assign({}), ContractError);
}

TEST(Params, InvalidArchitectureIsRejected) {
  GnnArchitecture arch;
  arch.taps = {2};
  EXPECT_THROW(arch.validate(), InvalidParameter);
  arch.taps = {2, 0};
  EXPECT_THROW(arch.validate(), InvalidParameter);
}

TEST(Checkpoint, JsonRoundTripIsExact) {
  GnnArchitecture arch;
  arch.activation = Activation::kTanh;
  arch.normalize_gso = true;
  const GnnParams p = init_params(arch, 17);
  EXPECT_EQ(checkpoint_from_json(checkpoint_to_json(p)), p);
}

TEST(Checkpoint, RejectsForeignDocuments) {
  EXPECT_THROW(checkpoint_from_json("{\"format\": \"other\"}"), Error);
  EXPECT_THROW(checkpoint_from_json("not json"), Error);
  EXPECT_THROW(load_checkpoint("/nonexistent/model.json"), Error);
}

}  // namespace
}  // namespace oproute
