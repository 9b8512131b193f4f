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

#include <fmt/format.h>

#include "oproute/errors.hpp"
#include "oproute/lagrangian.hpp"

namespace oproute {

using ad::Tape;
using ad::Var;

namespace {

enum class Objective { kLagrangian, kMultiplier };

struct Evaluation {
  double value = 0.0;
  Tensor slack;
  std::vector<Tensor> grads;  // keep, transmit, packets
};

Evaluation evaluate_objective(const UnparamProblem& problem, const RoutingContext& ctx,
                              const PrimalVars& x, const Tensor& mu, double rho,
                              Objective kind, bool with_grads) {
  Tape tape;
  Var keep = tape.leaf(x.keep_logits);
  Var transmit = tape.leaf(x.transmit_logits);
  Var packets = tape.leaf(x.packet_logits);
  DecisionVars dec = routing_heads(tape, ctx, keep, transmit, packets, problem.a0);
  Var slack = routing_slack(tape, ctx, dec);
  Var u = log_utility(tape, ctx, dec.packets);
  Var obj = kind == Objective::kLagrangian
                ? penalized_lagrangian(tape, u, slack, mu, 0.0)
                : multiplier_lagrangian(tape, u, slack, mu, rho);
  Evaluation out;
  out.value = obj.value().item();
  out.slack = slack.value();
  if (with_grads) {
    ad::Gradients g = tape.backward(obj);
    out.grads = {g[keep], g[transmit], g[packets]};
  }
  return out;
}

void ascend(PrimalVars& x, const std::vector<Tensor>& grads, double rate) {
  Tensor* parts[] = {&x.keep_logits, &x.transmit_logits, &x.packet_logits};
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t i = 0; i < parts[p]->size(); ++i) (*parts[p])[i] += rate * grads[p][i];
}

double norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

void check_health(const IterMetrics& m, const Tensor& mu, const char* solver) {
  if (!std::isfinite(m.utility) || !std::isfinite(m.lagrangian) || !mu.all_finite()) {
    throw DivergenceError(fmt::format("{}: iterate diverged at iteration {}", solver, m.iter),
                          m.iter);
  }
}

}  // namespace

UnparamProblem toy_problem() {
  Topology topo;
  topo.name = "toy";
  topo.positions = {{0.0, 0.0}, {0.2, 0.0}};
  topo.edges = {{0, 1}, {1, 0}};
  topo.capacity = {1.0, 1.0};
  UnparamProblem p;
  p.topo = topo;
  p.channel.probs = Tensor({2, 2}, {0.0, 0.8, 0.8, 0.0});
  p.spec = make_flows(2, std::vector<std::size_t>{1}, 0.2, ArrivalLaw::kConstant);
  p.a0 = p.spec.arrival_mean;
  return p;
}

UnparamProblem make_problem(Topology topo, double cutoff, FlowSpec spec) {
  UnparamProblem p;
  p.channel = channel_from_distance(topo, cutoff);
  p.topo = std::move(topo);
  p.spec = std::move(spec);
  p.a0 = p.spec.arrival_mean;
  return p;
}

PrimalVars PrimalVars::initial(const UnparamProblem& problem, double packet_logit) {
  const std::size_t n = problem.topo.size();
  const std::size_t flows = problem.spec.flows();
  return PrimalVars{Tensor({flows, n, n}), Tensor({n, flows}),
                    Tensor({n, flows}, packet_logit)};
}

RoutingDecision PrimalVars::decision(const UnparamProblem& problem) const {
  const RoutingContext ctx =
      RoutingContext::make(problem.channel, problem.topo, problem.spec, 1);
  Tape tape;
  DecisionVars dec = routing_heads(tape, ctx, tape.constant(keep_logits),
                                   tape.constant(transmit_logits),
                                   tape.constant(packet_logits), problem.a0);
  return extract_decision(ctx, dec, 0);
}

IterMetrics evaluate(const UnparamProblem& problem, const RoutingDecision& dec,
                     const Tensor& mu, double rho, std::size_t iter) {
  const std::size_t n = problem.topo.size();
  const std::size_t flows = problem.spec.flows();
  IterMetrics m;
  m.iter = iter;
  m.rho = rho;
  m.mu_norm = norm(mu);
  m.utility = utility_of_mean(dec.packets, problem.spec.destination);
  const Tensor slack = constraint_slack(dec, problem.channel, problem.topo, problem.spec);
  const Tensor inflow = neighbor_inflow(dec.transmit, dec.keep, problem.channel, problem.a0);
  double dual = 0.0, viol_sum = 0.0, queue_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < flows; ++k) {
      dual += mu(i, k) * slack(i, k);
      if (i == problem.spec.destination[k]) continue;
      const double v = std::max(0.0, -slack(i, k));
      m.max_violation = std::max(m.max_violation, v);
      viol_sum += v;
      queue_sum += std::max(0.0, problem.a0(i, k) + inflow(i, k) -
                                     dec.transmit(i, k) * problem.topo.capacity[i]);
      ++count;
    }
  if (count > 0) {
    m.mean_violation = viol_sum / static_cast<double>(count);
    m.queue_proxy = queue_sum / static_cast<double>(count);
  }
  m.lagrangian = m.utility + dual;
  return m;
}

DdResult dd_solve(const UnparamProblem& problem, const DdConfig& cfg) {
  if (!(cfg.primal_rate > 0.0) || !(cfg.dual_rate >= 0.0)) {
    throw InvalidParameter("dd: rates must be positive");
  }
  const RoutingContext ctx =
      RoutingContext::make(problem.channel, problem.topo, problem.spec, 1);
  DdResult res;
  res.primal = PrimalVars::initial(problem, cfg.packet_logit);
  res.mu = Tensor(problem.a0.shape());
  for (std::size_t m = 0; m < cfg.iters; ++m) {
    try {
      Evaluation ev = evaluate_objective(problem, ctx, res.primal, res.mu, 0.0,
                                         Objective::kLagrangian, true);
      ascend(res.primal, ev.grads, cfg.primal_rate);
      ev = evaluate_objective(problem, ctx, res.primal, res.mu, 0.0,
                              Objective::kLagrangian, false);
      for (std::size_t i = 0; i < res.mu.size(); ++i)
        res.mu[i] = std::max(0.0, res.mu[i] - cfg.dual_rate * ev.slack[i]);
      IterMetrics metrics = evaluate(problem, res.primal.decision(problem), res.mu, 0.0, m);
      metrics.lagrangian = ev.value;
      check_health(metrics, res.mu, "dd");
      res.history.push_back(metrics);
    } catch (const NumericHealthError& e) {
      throw DivergenceError(fmt::format("dd: iteration {}: {}", m, e.what()), m);
    } catch (const DomainError& e) {
      throw DivergenceError(fmt::format("dd: iteration {}: {}", m, e.what()), m);
    }
  }
  return res;
}

MomResult mom_solve(const UnparamProblem& problem, const MomConfig& cfg) {
  if (!(cfg.rho0 > 0.0)) throw InvalidParameter("mom: rho0 must be positive");
  if (!(cfg.decay > 0.0)) throw InvalidParameter("mom: decay must be positive");
  if (!(cfg.primal_rate > 0.0)) throw InvalidParameter("mom: primal rate must be positive");
  const RoutingContext ctx =
      RoutingContext::make(problem.channel, problem.topo, problem.spec, 1);
  MomResult res;
  res.primal = PrimalVars::initial(problem, cfg.packet_logit);
  res.mu = Tensor(problem.a0.shape());
  res.z = Tensor(problem.a0.shape());
  res.rho = cfg.rho0;
  for (std::size_t m = 0; m < cfg.outer_iters; ++m) {
    try {
      Evaluation cur = evaluate_objective(problem, ctx, res.primal, res.mu, res.rho,
                                          Objective::kMultiplier, true);
      std::vector<double> trace{cur.value};
      for (std::size_t s = 0; s < cfg.inner_steps; ++s) {
        double rate = cfg.primal_rate;
        bool accepted = false;
        for (std::size_t h = 0; h <= cfg.max_halvings && !accepted; ++h, rate *= 0.5) {
          PrimalVars trial = res.primal;
          ascend(trial, cur.grads, rate);
          try {
            Evaluation next = evaluate_objective(problem, ctx, trial, res.mu, res.rho,
                                                 Objective::kMultiplier, true);
            if (next.value >= cur.value) {
              res.primal = std::move(trial);
              cur = std::move(next);
              trace.push_back(cur.value);
              accepted = true;
            }
          } catch (const DomainError&) {
          } catch (const NumericHealthError&) {
          }
        }
        if (!accepted) break;
      }
      double resid2 = 0.0;
      for (std::size_t i = 0; i < res.mu.size(); ++i) {
        const double g = cur.slack[i];
        const double resid = std::min(g, res.mu[i] / res.rho);
        resid2 += resid * resid;
        res.z[i] = g - resid;
        res.mu[i] = std::max(0.0, res.mu[i] - res.rho * resid);
      }
      res.inner_values.push_back(std::move(trace));
      res.residual_norms.push_back(std::sqrt(resid2));
      IterMetrics metrics = evaluate(problem, res.primal.decision(problem), res.mu, res.rho, m);
      metrics.lagrangian = cur.value;
      check_health(metrics, res.mu, "mom");
      res.history.push_back(metrics);
      res.rho *= cfg.decay;
    } catch (const NumericHealthError& e) {
      throw DivergenceError(fmt::format("mom: iteration {}: {}", m, e.what()), m);
    } catch (const DomainError& e) {
      throw DivergenceError(fmt::format("mom: iteration {}: {}", m, e.what()), m);
    }
  }
  return res;
}

std::string iter_metrics_csv(const std::vector<IterMetrics>& history) {
  std::string out = "iter,utility,max_violation,mean_violation,mean_queue_proxy,rho,mu_norm\n";
  for (const IterMetrics& m : history)
    out += fmt::format("{},{},{},{},{},{},{}\n", m.iter, m.utility, m.max_violation,
                       m.mean_violation, m.queue_proxy, m.rho, m.mu_norm);
  return out;
}

}  // namespace oproute
