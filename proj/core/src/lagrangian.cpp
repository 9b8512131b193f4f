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

#include "oproute/lagrangian.hpp"

#include "oproute/errors.hpp"

namespace oproute {

using ad::Tape;
using ad::Var;

RoutingContext RoutingContext::make(const ChannelMatrix& channel, const Topology& topo,
                                    const FlowSpec& spec, std::size_t steps) {
  const std::size_t n = channel.size();
  if (topo.size() != n) throw ContractError("context: topology and channel sizes differ");
  spec.validate(n);
  if (steps == 0) throw InvalidParameter("context: at least one step is required");
  RoutingContext ctx;
  ctx.nodes = n;
  ctx.steps = steps;
  ctx.flows = spec.flows();
  ctx.probs = channel.probs;
  const std::size_t signals = ctx.signals();
  ctx.capacity = Tensor({n, signals});
  ctx.mask = Tensor({n, signals}, 1.0);
  ctx.unmask = Tensor({n, signals});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < signals; ++s) {
      ctx.capacity(i, s) = topo.capacity[i];
      if (spec.destination[s % ctx.flows] == i) {
        ctx.mask(i, s) = 0.0;
        ctx.unmask(i, s) = 1.0;
      }
    }
  return ctx;
}

DecisionVars routing_heads(Tape& tape, const RoutingContext& ctx, const Var& keep_logits,
                           const Var& transmit_logits, const Var& packet_logits,
                           const Tensor& a0) {
  const std::size_t n = ctx.nodes;
  const std::size_t signals = ctx.signals();
  if (a0.shape() != Shape{n, signals}) {
    throw ContractError("heads: arrivals have shape " + shape_string(a0.shape()) +
                        ", expected " + shape_string({n, signals}));
  }
  DecisionVars dec;
  dec.keep = ad::masked_row_softmax(keep_logits, ctx.probs);
  const Shape by_step{n, ctx.steps, ctx.flows};
  Var logits = ad::reshape(transmit_logits, by_step);
  dec.transmit = ad::reshape(
      ad::softmax_with_idle(logits, ctx.mask.reshaped(by_step)), {n, signals});
  Var extra = ad::hadamard(ad::relu(packet_logits), tape.constant(ctx.mask));
  dec.packets = ad::add(tape.constant(a0), extra);
  return dec;
}

Var routing_slack(Tape& tape, const RoutingContext& ctx, const DecisionVars& dec) {
  Var sent = ad::hadamard(dec.transmit, tape.constant(ctx.capacity));
  Var relayed = ad::neighbor_inflow(ctx.probs, dec.keep,
                                    ad::hadamard(dec.transmit, dec.packets));
  Var slack = ad::sub(ad::sub(sent, dec.packets), relayed);
  return ad::hadamard(slack, tape.constant(ctx.mask));
}

Var time_mean(const RoutingContext& ctx, const Var& v) {
  return ad::mean_axis1(ad::reshape(v, {ctx.nodes, ctx.steps, ctx.flows}));
}

Var log_utility(Tape& tape, const RoutingContext& ctx, const Var& mean_packets) {
  Tensor pad({ctx.nodes, ctx.flows});
  for (std::size_t i = 0; i < ctx.nodes; ++i)
    for (std::size_t k = 0; k < ctx.flows; ++k) pad(i, k) = ctx.unmask(i, k);
  return ad::sum(ad::log(ad::add(mean_packets, tape.constant(std::move(pad)))));
}

Var penalized_lagrangian(Tape& tape, const Var& utility, const Var& mean_slack,
                         const Tensor& mu, double rho) {
  Var dual = ad::sum(ad::hadamard(tape.constant(mu), mean_slack));
  Var violation = ad::relu(ad::scale(mean_slack, -1.0));
  return ad::add(ad::add(utility, dual),
                 ad::scale(ad::squared_norm(violation), -0.5 * rho));
}

Var multiplier_lagrangian(Tape& tape, const Var& utility, const Var& slack,
                          const Tensor& mu, double rho) {
  if (!(rho > 0.0)) throw InvalidParameter("multiplier lagrangian: rho must be positive");
  Tensor threshold = mu;
  for (double& v : threshold.data()) v /= rho;
  Var z = ad::relu(ad::sub(slack, tape.constant(std::move(threshold))));
  Var resid = ad::sub(slack, z);
  Var dual = ad::sum(ad::hadamard(tape.constant(mu), resid));
  return ad::add(ad::add(utility, dual),
                 ad::scale(ad::squared_norm(resid), -0.5 * rho));
}

RoutingDecision extract_decision(const RoutingContext& ctx, const DecisionVars& dec,
                                 std::size_t t) {
  const std::size_t n = ctx.nodes;
  const std::size_t flows = ctx.flows;
  const std::size_t signals = ctx.signals();
  if (t >= ctx.steps) throw ContractError("extract: step out of range");
  RoutingDecision out{Tensor({n, flows}), Tensor({flows, n, n}), Tensor({n, flows})};
  const Tensor& tv = dec.transmit.value();
  const Tensor& pv = dec.packets.value();
  const Tensor& kv = dec.keep.value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < flows; ++k) {
      out.transmit(i, k) = tv[i * signals + t * flows + k];
      out.packets(i, k) = pv[i * signals + t * flows + k];
    }
  for (std::size_t k = 0; k < flows; ++k) {
    const std::size_t s = t * flows + k;
    std::copy_n(kv.data().data() + s * n * n, n * n, out.keep.data().data() + k * n * n);
  }
  return out;
}

Tensor stack_steps(const std::vector<Tensor>& per_step) {
  if (per_step.empty()) throw ContractError("stack: no steps");
  const std::size_t n = per_step[0].dim(0);
  const std::size_t flows = per_step[0].dim(1);
  const std::size_t steps = per_step.size();
  Tensor out({n, steps * flows});
  for (std::size_t t = 0; t < steps; ++t) {
    if (per_step[t].shape() != per_step[0].shape()) {
      throw ContractError("stack: steps have different shapes");
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < flows; ++k)
        out(i, t * flows + k) = per_step[t](i, k);
  }
  return out;
}

}  // namespace oproute
