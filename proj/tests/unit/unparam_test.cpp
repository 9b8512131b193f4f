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

#include "oproute/unparam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "oproute/errors.hpp"

namespace oproute {
namespace {

struct GridPoint {
  double a = 0.0, transmit = 0.0, keep = 0.0;
};

// Exhaustive 0.01 grid over (a, T, K) of node 0 in the toy problem. Node 1 is
// the destination, so its own variables are fixed at zero.
std::vector<GridPoint> grid_optima(const UnparamProblem& p) {
  const double c = p.topo.capacity[0];
  const double a0 = p.a0(0, 0);
  const double r = p.channel.probs(0, 1);
  const double t1 = 0.0, a1 = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<GridPoint> argmax;
  for (int ia = 0; ia <= 200; ++ia) {
    const double a = 0.01 * ia;
    if (a < a0 - 1e-12) continue;
    for (int it = 0; it <= 100; ++it) {
      const double t = 0.01 * it;
      for (int ik = 0; ik <= 100; ++ik) {
        const double k = 0.01 * ik;
        if (t * c - a - t1 * r * k * a1 < -1e-12) continue;
        const double u = std::log(a);
        if (u > best + 1e-12) {
          best = u;
          argmax.clear();
        }
        if (std::abs(u - best) <= 1e-12) argmax.push_back({a, t, k});
      }
    }
  }
  return argmax;
}

double distance_to_grid(const RoutingDecision& d, const std::vector<GridPoint>& optima) {
  double best = std::numeric_limits<double>::infinity();
  for (const GridPoint& g : optima) {
    const double sup = std::max({std::abs(d.packets(0, 0) - g.a),
                                 std::abs(d.transmit(0, 0) - g.transmit),
                                 std::abs(d.keep(0, 0, 1) - g.keep)});
    best = std::min(best, sup);
  }
  return best;
}

TEST(Toy, GridOptimumIsFullRate) {
  const auto optima = grid_optima(toy_problem());
  ASSERT_FALSE(optima.empty());
  EXPECT_DOUBLE_EQ(optima.front().a, 1.0);
  EXPECT_DOUBLE_EQ(optima.front().transmit, 1.0);
}

TEST(Toy, DualDescentReachesGridOptimum) {
  const UnparamProblem p = toy_problem();
  DdConfig cfg;
  cfg.iters = 300;
  const DdResult r = dd_solve(p, cfg);
  EXPECT_LE(distance_to_grid(r.primal.decision(p), grid_optima(p)), 0.02);
}

TEST(Toy, MultipliersReachGridOptimum) {
  const UnparamProblem p = toy_problem();
  const MomResult r = mom_solve(p, MomConfig{});
  EXPECT_LE(distance_to_grid(r.primal.decision(p), grid_optima(p)), 0.02);
}

TEST(Toy, MultipliersBeatDualDescentAtEqualBudget) {
  const UnparamProblem p = toy_problem();
  const DdResult dd = dd_solve(p, DdConfig{});
  const MomResult mom = mom_solve(p, MomConfig{});
  ASSERT_EQ(dd.history.size(), 30u);
  ASSERT_EQ(mom.history.size(), 30u);
  EXPECT_GE(mom.history.back().utility, dd.history.back().utility);
}

TEST(Toy, ViolationDoesNotGrowOverTheLastTenIterations) {
  const MomResult r = mom_solve(toy_problem(), MomConfig{});
  for (std::size_t m = r.history.size() - 10; m < r.history.size(); ++m)
    EXPECT_LE(r.history[m].max_violation, r.history[m - 1].max_violation + 1e-12) << m;
}

TEST(Toy, InnerLoopNeverDecreasesTheObjective) {
  const MomResult r = mom_solve(toy_problem(), MomConfig{});
  ASSERT_EQ(r.inner_values.size(), 30u);
  for (const auto& trace : r.inner_values)
    for (std::size_t s = 1; s < trace.size(); ++s) EXPECT_GE(trace[s], trace[s - 1]);
}

TEST(Toy, LargePenaltyDrivesResidualDown) {
  MomConfig cfg;
  cfg.rho0 = 50.0;
  cfg.decay = 1.0;
  cfg.primal_rate = 0.1;
  const MomResult r = mom_solve(toy_problem(), cfg);
  EXPECT_LE(r.residual_norms.back(), r.residual_norms.front());
  EXPECT_LT(r.residual_norms.back(), 1e-3);
}

UnparamProblem roomy_problem() {
  const Topology topo = generate_knn(6, 2, 3);
  return make_problem(topo, 1.0, make_flows(6, 2, 0.2, 4, ArrivalLaw::kConstant));
}

TEST(DualDescent, SlackStaysPositiveSoDualStaysZero) {
  const DdResult r = dd_solve(roomy_problem(), DdConfig{});
  for (const IterMetrics& m : r.history) {
    EXPECT_EQ(m.mu_norm, 0.0);
    EXPECT_EQ(m.max_violation, 0.0);
  }
}

TEST(DualDescent, ZeroDualRateFreezesDualAndAscendsUtility) {
  DdConfig cfg;
  cfg.dual_rate = 0.0;
  const DdResult r = dd_solve(toy_problem(), cfg);
  EXPECT_EQ(r.mu.max_abs(), 0.0);
  for (std::size_t m = 1; m < r.history.size(); ++m)
    EXPECT_GE(r.history[m].utility, r.history[m - 1].utility);
}

TEST(DualDescent, DualIsNeverNegative) {
  const UnparamProblem p =
      make_problem(generate_knn(10, 4, 1), 1.0, make_flows(10, 4, 16.0, 2, ArrivalLaw::kConstant));
  const DdResult r = dd_solve(p, DdConfig{});
  for (double v : r.mu.data()) EXPECT_GE(v, 0.0);
  const MomResult m = mom_solve(p, MomConfig{});
  for (double v : m.mu.data()) EXPECT_GE(v, 0.0);
  for (double v : m.z.data()) EXPECT_GE(v, 0.0);
}

TEST(Solvers, InvalidRatesAreRejected) {
  DdConfig dd;
  dd.primal_rate = 0.0;
  EXPECT_THROW(dd_solve(toy_problem(), dd), InvalidParameter);
  MomConfig mom;
  mom.rho0 = 0.0;
  EXPECT_THROW(mom_solve(toy_problem(), mom), InvalidParameter);
}

TEST(Solvers, DivergenceNamesTheIteration) {
  DdConfig cfg;
  cfg.primal_rate = 1e300;
  try {
    dd_solve(toy_problem(), cfg);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.iteration(), 0u);
  }
}

TEST(Solvers, MetricsCsvHasOneRowPerIteration) {
  const DdResult r = dd_solve(toy_problem(), DdConfig{});
  const std::string csv = iter_metrics_csv(r.history);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "iter,utility,max_violation,mean_violation,mean_queue_proxy,rho,mu_norm");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 31);
}

}  // namespace
}  // namespace oproute
