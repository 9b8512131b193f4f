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
#include <exception>
#include <memory>
#include <thread>

#include <fmt/format.h>

#include "oproute/errors.hpp"
#include "oproute/lagrangian.hpp"

namespace oproute {

using ad::Tape;
using ad::Var;

void DualState::update(const Tensor& window_slack,
                       const std::vector<std::size_t>& destination) {
  if (window_slack.shape() != mu.shape()) {
    throw ContractError("dual update: slack shape " + shape_string(window_slack.shape()) +
                        " does not match " + shape_string(mu.shape()));
  }
  for (std::size_t i = 0; i < mu.size(); ++i)
    mu[i] = std::max(0.0, mu[i] - rate * window_slack[i]);
  for (std::size_t k = 0; k < destination.size(); ++k) mu(destination[k], k) = 0.0;
}

double augmented_lagrangian(const Trajectory& traj, const Tensor& mu, double rho) {
  const double u = utility(traj);
  const Tensor s = traj.mean_slack();
  if (s.shape() != mu.shape()) throw ContractError("lagrangian: dual shape mismatch");
  double dual = 0.0, penalty = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    dual += mu[i] * s[i];
    const double v = std::min(s[i], 0.0);
    penalty += v * v;
  }
  return u + dual - 0.5 * rho * penalty;
}

void TrainConfig::validate() const {
  if (nodes == 0 || flows == 0) throw InvalidParameter("train: nodes and flows must be positive");
  if (batch == 0) throw InvalidParameter("train: batch must be at least 1");
  if (horizon == 0) throw InvalidParameter("train: horizon must be positive");
  if (period == 0) throw InvalidParameter("train: period must be positive");
  if (samples == 0) throw InvalidParameter("train: need at least one training network");
  if (!(mu_low >= 0.0 && mu_high >= mu_low)) {
    throw InvalidParameter("train: dual sampling bounds must satisfy 0 <= low <= high");
  }
  if (!(rho >= 0.0)) throw InvalidParameter("train: rho must be non-negative");
  if (!(arrival_spread >= 0.0 && arrival_spread <= 1.0)) {
    throw InvalidParameter("train: arrival spread must lie in [0, 1]");
  }
  if (!(lr > 0.0)) throw InvalidParameter("train: learning rate must be positive");
  if (arch.widths.empty() || arch.widths[0] != 2) {
    throw InvalidParameter("train: the policy input must have F_0 = 2 (arrivals, duals)");
  }
  arch.validate();
}

TopologySampler knn_sampler(const TrainConfig& cfg) {
  auto pool = std::make_shared<std::vector<TrainingSample>>();
  pool->reserve(cfg.samples);
  for (std::size_t s = 0; s < cfg.samples; ++s) {
    std::seed_seq seq{cfg.seed, std::uint64_t{0x746f706f}, static_cast<std::uint64_t>(s)};
    Rng rng(seq);
    const std::uint64_t topo_seed = rng();
    const std::uint64_t flow_seed = rng();
    TrainingSample sample;
    sample.topo = generate_knn(cfg.nodes, cfg.knn, topo_seed, cfg.capacity);
    sample.channel = channel_from_distance(sample.topo, cfg.cutoff);
    sample.spec = make_flows(cfg.nodes, cfg.flows, cfg.arrival_mean, flow_seed, cfg.law,
                             cfg.arrival_spread);
    pool->push_back(std::move(sample));
  }
  return [pool](Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, pool->size() - 1);
    return (*pool)[pick(rng)];
  };
}

std::size_t TrainConfig::batches_per_epoch() const {
  return std::max<std::size_t>(1, (samples + batch - 1) / batch);
}

std::vector<BatchElement> draw_batch(const TrainConfig& cfg, const TopologySampler& sampler,
                                     std::size_t epoch, std::size_t step) {
  std::vector<BatchElement> batch;
  batch.reserve(cfg.batch);
  for (std::size_t b = 0; b < cfg.batch; ++b) {
    std::seed_seq seq{cfg.seed, std::uint64_t{0x62617463}, static_cast<std::uint64_t>(epoch),
                      static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(b)};
    Rng rng(seq);
    BatchElement el;
    el.sample = sampler(rng);
    const std::size_t n = el.sample.topo.size();
    const std::size_t flows = el.sample.spec.flows();
    std::uniform_real_distribution<double> dual(cfg.mu_low, cfg.mu_high);
    el.mu = Tensor({n, flows});
    for (double& v : el.mu.data()) v = dual(rng);
    for (std::size_t k = 0; k < flows; ++k) el.mu(el.sample.spec.destination[k], k) = 0.0;
    std::vector<Tensor> steps;
    steps.reserve(cfg.horizon);
    for (std::size_t t = 0; t < cfg.horizon; ++t)
      steps.push_back(sample_arrivals(el.sample.spec, rng));
    el.a0 = stack_steps(steps);
    batch.push_back(std::move(el));
  }
  return batch;
}

namespace {

struct ElementResult {
  double lagrangian = 0.0;
  double utility = 0.0;
  double violation = 0.0;
  std::vector<Tensor> grads;
};

ElementResult evaluate_element(const GnnParams& params, const BatchElement& el,
                               std::size_t horizon, double rho, bool with_grads) {
  const TrainingSample& s = el.sample;
  const RoutingContext ctx = RoutingContext::make(s.channel, s.topo, s.spec, horizon);
  Tape tape;
  GnnVars vars = attach(tape, params, with_grads);
  const Tensor gso = graph_shift_operator(s.channel, params.arch.normalize_gso);
  Var x = tape.constant(dual_features(el.a0, el.mu, ctx.flows));
  DecisionVars dec = decide(tape, ctx, gso, x, vars, params.arch, el.a0);
  Var mean_slack = time_mean(ctx, routing_slack(tape, ctx, dec));
  Var u = log_utility(tape, ctx, time_mean(ctx, dec.packets));
  Var lag = penalized_lagrangian(tape, u, mean_slack, el.mu, rho);
  ElementResult r;
  r.lagrangian = lag.value().item();
  r.utility = u.value().item();
  double viol = 0.0;
  std::size_t count = 0;
  const Tensor& sv = mean_slack.value();
  for (std::size_t i = 0; i < ctx.nodes; ++i)
    for (std::size_t k = 0; k < ctx.flows; ++k) {
      if (ctx.mask(i, k) == 0.0) continue;
      viol += std::max(0.0, -sv(i, k));
      ++count;
    }
  r.violation = count > 0 ? viol / static_cast<double>(count) : 0.0;
  if (with_grads) {
    ad::Gradients g = tape.backward(lag);
    for (const Var& v : vars.all()) r.grads.push_back(g[v]);
  }
  return r;
}

std::size_t resolve_threads(std::size_t requested, std::size_t work) {
  std::size_t t = requested;
  if (t == 0) t = std::max<unsigned>(1, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(t, work));
}

}  // namespace

BatchEvaluation evaluate_batch(const GnnParams& params, const std::vector<BatchElement>& batch,
                               std::size_t horizon, double rho, bool with_grads,
                               std::size_t threads) {
  if (batch.empty()) throw ContractError("batch: empty");
  std::vector<ElementResult> results(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());
  const std::size_t workers = resolve_threads(threads, batch.size());
  auto work = [&](std::size_t w) {
    for (std::size_t b = w; b < batch.size(); b += workers) {
      try {
        results[b] = evaluate_element(params, batch[b], horizon, rho, with_grads);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (!errors[b]) continue;
    try {
      std::rethrow_exception(errors[b]);
    } catch (const Error& e) {
      throw NumericHealthError(fmt::format("batch element {}: {}", b, e.what()));
    }
  }
  BatchEvaluation out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    out.lagrangian += results[b].lagrangian * inv;
    out.utility += results[b].utility * inv;
    out.mean_violation += results[b].violation * inv;
    if (!with_grads) continue;
    if (out.grads.empty()) {
      for (const Tensor& g : results[b].grads) out.grads.push_back(Tensor(g.shape()));
    }
    for (std::size_t p = 0; p < out.grads.size(); ++p)
      for (std::size_t i = 0; i < out.grads[p].size(); ++i)
        out.grads[p][i] += results[b].grads[p][i] * inv;
  }
  return out;
}

TrainResult train(const TrainConfig& cfg, const TopologySampler& sampler,
                  std::optional<GnnParams> init) {
  cfg.validate();
  TrainResult res;
  res.params = init ? *init : init_params(cfg.arch, cfg.seed);
  res.params.validate();
  AdamState adam;
  adam.config.lr = cfg.lr;
  double rho = cfg.rho;
  const std::size_t steps = cfg.batches_per_epoch();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    TrainRecord rec{epoch, 0.0, 0.0, 0.0};
    for (std::size_t step = 0; step < steps; ++step) {
      const std::vector<BatchElement> batch = draw_batch(cfg, sampler, epoch, step);
      BatchEvaluation ev;
      try {
        ev = evaluate_batch(res.params, batch, cfg.horizon, rho, true, cfg.threads);
      } catch (const Error& e) {
        throw NumericHealthError(
            fmt::format("train: epoch {} batch {}: {}", epoch, step, e.what()));
      }
      const double inv = 1.0 / static_cast<double>(steps);
      rec.lagrangian += ev.lagrangian * inv;
      rec.utility += ev.utility * inv;
      rec.mean_violation += ev.mean_violation * inv;
      std::vector<Tensor> flat = res.params.flatten();
      adam_step(adam, flat, ev.grads, true);
      for (const Tensor& t : flat)
        if (!t.all_finite()) {
          throw NumericHealthError(fmt::format(
              "train: epoch {} batch {}: parameters became non-finite", epoch, step));
        }
      res.params.assign(std::move(flat));
    }
    res.log.push_back(rec);
    rho *= cfg.rho_decay;
  }
  return res;
}

std::string train_log_csv(const std::vector<TrainRecord>& log) {
  std::string out = "epoch,lagrangian,utility,mean_violation\n";
  for (const TrainRecord& r : log)
    out += fmt::format("{},{},{},{}\n", r.epoch, r.lagrangian, r.utility, r.mean_violation);
  return out;
}

ExecResult execute(const GnnParams& params, const Topology& topo, const ChannelMatrix& channel,
                   const FlowSpec& spec, const ExecConfig& cfg, Rng& rng) {
  params.validate();
  if (params.arch.widths[0] != 2) {
    throw ContractError("execute: checkpoint expects " + std::to_string(params.arch.widths[0]) +
                        " input features, the state-augmented policy needs 2");
  }
  if (channel.size() != topo.size()) {
    throw ContractError("execute: channel has " + std::to_string(channel.size()) +
                        " nodes but the topology has " + std::to_string(topo.size()));
  }
  if (cfg.period == 0) throw InvalidParameter("execute: period must be positive");
  const std::size_t n = topo.size();
  const std::size_t flows = spec.flows();
  spec.validate(n);
  ExecResult res;
  res.traj.destination = spec.destination;
  DualState dual{Tensor({n, flows}), cfg.period, cfg.dual_rate};
  Tensor window({n, flows});
  QueueState q = QueueState::zeros(n, flows);
  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    Tensor a0 = sample_arrivals(spec, rng);
    const ChannelMatrix ch = cfg.jitter > 0.0 ? jitter_channel(channel, cfg.jitter, rng) : channel;
    const Tensor x = dual_features(a0, dual.mu, flows).reshaped({n, flows, 2});
    RoutingDecision dec = decide(ch, topo, x, params, spec, a0);
    QueueState next = step_queues(q, a0, dec, ch, topo, spec);
    TrajectoryStep step;
    step.slack = constraint_slack(dec, ch, topo, spec);
    step.received = neighbor_inflow(dec.transmit, dec.keep, ch, a0);
    step.a0 = std::move(a0);
    step.transmit = dec.transmit;
    step.packets = dec.packets;
    step.q = next.q;
    res.mu.push_back(dual.mu);
    for (std::size_t i = 0; i < window.size(); ++i) window[i] += step.slack[i];
    res.traj.steps.push_back(std::move(step));
    if (cfg.keep_decisions) res.decisions.push_back(std::move(dec));
    q = std::move(next);
    if ((t + 1) % cfg.period == 0) {
      for (double& v : window.data()) v /= static_cast<double>(cfg.period);
      dual.update(window, spec.destination);
      res.window_slack.push_back(window);
      window.fill(0.0);
    }
  }
  return res;
}

std::string execution_log_csv(const ExecResult& res) {
  std::string out = "t,utility_so_far,mean_queue,mu_norm\n";
  const std::vector<double> mq = res.traj.mean_queue();
  if (res.traj.steps.empty()) return out;
  Tensor total(res.traj.steps[0].packets.shape());
  for (std::size_t t = 0; t < res.traj.steps.size(); ++t) {
    const TrajectoryStep& s = res.traj.steps[t];
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += s.packets[i];
    Tensor mean = total;
    for (double& v : mean.data()) v /= static_cast<double>(t + 1);
    std::string u;
    try {
      u = fmt::format("{}", utility_of_mean(mean, res.traj.destination));
    } catch (const DomainError&) {
      u = "";
    }
    double mu2 = 0.0;
    for (double v : res.mu[t].data()) mu2 += v * v;
    out += fmt::format("{},{},{},{}\n", t, u, mq[t], std::sqrt(mu2));
  }
  return out;
}

std::string dual_trace_csv(const ExecResult& res) {
  std::string out = "t,node,flow,mu,q\n";
  for (std::size_t t = 0; t < res.traj.steps.size(); ++t) {
    const Tensor& q = res.traj.steps[t].q;
    const Tensor& mu = res.mu[t];
    for (std::size_t i = 0; i < q.dim(0); ++i)
      for (std::size_t k = 0; k < q.dim(1); ++k)
        out += fmt::format("{},{},{},{},{}\n", t, i, k, mu(i, k), q(i, k));
  }
  return out;
}

}  // namespace oproute
