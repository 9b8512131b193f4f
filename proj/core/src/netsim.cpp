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

#include "oproute/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "oproute/errors.hpp"

namespace oproute {

namespace {

void require_shape(const char* what, const Tensor& t, const Shape& shape) {
  if (t.shape() != shape) {
    throw ContractError(std::string(what) + ": expected shape " +
                        shape_string(shape) + ", got " + shape_string(t.shape()));
  }
}

void check_decision_shapes(const RoutingDecision& dec, std::size_t n,
                           std::size_t flows) {
  require_shape("transmit", dec.transmit, {n, flows});
  require_shape("keep", dec.keep, {flows, n, n});
  require_shape("packets", dec.packets, {n, flows});
}

}  // namespace

void RoutingDecision::validate(const ChannelMatrix& channel, const Tensor* a0,
                               double tol) const {
  const std::size_t n = channel.size();
  const std::size_t flows = transmit.rank() == 2 ? transmit.dim(1) : 0;
  check_decision_shapes(*this, n, flows);
  for (std::size_t i = 0; i < n; ++i) {
    double budget = 0.0;
    for (std::size_t k = 0; k < flows; ++k) {
      const double t = transmit(i, k);
      if (t < -tol || t > 1.0 + tol) {
        throw ContractError(fmt::format("transmit({}, {}) = {} outside [0, 1]", i, k, t));
      }
      budget += t;
      if (packets(i, k) < -tol) {
        throw ContractError(fmt::format("packets({}, {}) is negative", i, k));
      }
      if (a0 != nullptr && packets(i, k) < (*a0)(i, k) - tol) {
        throw ContractError(fmt::format("packets({}, {}) below arrivals", i, k));
      }
    }
    if (budget > 1.0 + tol) {
      throw ContractError(fmt::format("node {} transmits with total probability {}", i, budget));
    }
  }
  for (std::size_t k = 0; k < flows; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double kv = keep(k, i, j);
        if (kv < -tol || kv > 1.0 + tol) {
          throw ContractError(fmt::format("keep({}, {}, {}) outside [0, 1]", k, i, j));
        }
        if (channel.probs(i, j) == 0.0 && kv != 0.0) {
          throw ContractError(fmt::format("keep({}, {}, {}) set on a missing link", k, i, j));
        }
      }
}

std::vector<double> Trajectory::mean_queue() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const TrajectoryStep& s : steps) {
    const std::size_t n = s.q.dim(0);
    const std::size_t flows = s.q.dim(1);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < flows; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        if (i == destination[k]) continue;
        total += s.q(i, k);
        ++count;
      }
    out.push_back(count > 0 ? total / static_cast<double>(count) : 0.0);
  }
  return out;
}

Tensor Trajectory::mean_slack() const {
  if (steps.empty()) throw ContractError("trajectory: empty");
  Tensor out(steps[0].slack.shape());
  for (const TrajectoryStep& s : steps)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s.slack[i];
  for (double& v : out.data()) v /= static_cast<double>(steps.size());
  return out;
}

Tensor sample_arrivals(const FlowSpec& spec, Rng& rng) {
  Tensor out(spec.arrival_mean.shape());
  const std::size_t flows = spec.flows();
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    const double m = spec.arrival_mean[idx];
    if (m <= 0.0) continue;
    switch (spec.law) {
      case ArrivalLaw::kConstant:
        out[idx] = m;
        break;
      case ArrivalLaw::kUniform:
        out[idx] = std::uniform_real_distribution<double>(0.0, 2.0 * m)(rng);
        break;
      case ArrivalLaw::kExponential:
        out[idx] = std::exponential_distribution<double>(1.0 / m)(rng);
        break;
    }
  }
  for (std::size_t k = 0; k < flows; ++k) out(spec.destination[k], k) = 0.0;
  return out;
}

ChannelMatrix jitter_channel(const ChannelMatrix& channel, double sigma, Rng& rng) {
  ChannelMatrix out = channel;
  if (sigma <= 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& r : out.probs.data()) {
    if (r == 0.0) continue;
    r = std::clamp(r * (1.0 + noise(rng)), 0.0, 1.0);
  }
  return out;
}

Tensor neighbor_inflow(const Tensor& transmit, const Tensor& keep,
                       const ChannelMatrix& channel, const Tensor& v) {
  const std::size_t n = channel.size();
  const std::size_t flows = transmit.rank() == 2 ? transmit.dim(1) : 0;
  require_shape("transmit", transmit, {n, flows});
  require_shape("keep", keep, {flows, n, n});
  require_shape("inflow source", v, {n, flows});
  Tensor out({n, flows});
  for (std::size_t k = 0; k < flows; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double* krow = keep.data().data() + (k * n + i) * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double r = channel.probs(i, j);
        if (r == 0.0) continue;
        acc += transmit(j, k) * r * krow[j] * v(j, k);
      }
      out(i, k) = acc;
    }
  return out;
}

QueueState step_queues(const QueueState& q, const Tensor& a0,
                       const RoutingDecision& dec, const ChannelMatrix& channel,
                       const Topology& topo, const FlowSpec& spec) {
  const std::size_t n = channel.size();
  const std::size_t flows = spec.flows();
  if (topo.size() != n) throw ContractError("step: topology and channel sizes differ");
  require_shape("queues", q.q, {n, flows});
  require_shape("arrivals", a0, {n, flows});
  check_decision_shapes(dec, n, flows);
  const Tensor inflow = neighbor_inflow(dec.transmit, dec.keep, channel, a0);
  QueueState next{Tensor({n, flows})};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < flows; ++k) {
      if (i == spec.destination[k]) continue;
      const double v = q.q(i, k) + a0(i, k) + inflow(i, k) -
                       dec.transmit(i, k) * topo.capacity[i];
      next.q(i, k) = std::max(0.0, v);
    }
  return next;
}

Tensor constraint_slack(const RoutingDecision& dec, const ChannelMatrix& channel,
                        const Topology& topo) {
  const std::size_t n = channel.size();
  const std::size_t flows = dec.transmit.rank() == 2 ? dec.transmit.dim(1) : 0;
  if (topo.size() != n) throw ContractError("slack: topology and channel sizes differ");
  check_decision_shapes(dec, n, flows);
  Tensor out = neighbor_inflow(dec.transmit, dec.keep, channel, dec.packets);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < flows; ++k)
      out(i, k) = dec.transmit(i, k) * topo.capacity[i] - dec.packets(i, k) - out(i, k);
  return out;
}

Tensor constraint_slack(const RoutingDecision& dec, const ChannelMatrix& channel,
                        const Topology& topo, const FlowSpec& spec) {
  Tensor out = constraint_slack(dec, channel, topo);
  if (out.dim(1) != spec.flows()) throw ContractError("slack: flow count mismatch");
  for (std::size_t k = 0; k < spec.flows(); ++k) out(spec.destination[k], k) = 0.0;
  return out;
}

double utility_of_mean(const Tensor& mean_packets,
                       const std::vector<std::size_t>& destination) {
  const std::size_t n = mean_packets.dim(0);
  const std::size_t flows = mean_packets.dim(1);
  if (destination.size() != flows) throw ContractError("utility: flow count mismatch");
  double u = 0.0;
  for (std::size_t k = 0; k < flows; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      if (i == destination[k]) continue;
      const double m = mean_packets(i, k);
      if (!(m > 0.0)) {
        throw DomainError(fmt::format(
            "utility: time-averaged packets at node {} flow {} is {} (must be > 0)", i, k, m));
      }
      u += std::log(m);
    }
  return u;
}

double utility(const Trajectory& traj) {
  if (traj.steps.empty()) throw ContractError("utility: empty trajectory");
  Tensor mean(traj.steps[0].packets.shape());
  for (const TrajectoryStep& s : traj.steps)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.packets[i];
  for (double& v : mean.data()) v /= static_cast<double>(traj.steps.size());
  return utility_of_mean(mean, traj.destination);
}

double least_squares_slope(const std::vector<double>& y) {
  const std::size_t m = y.size();
  if (m < 2) throw InvalidParameter("slope: need at least 2 points");
  const double xbar = static_cast<double>(m - 1) / 2.0;
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    const double dx = static_cast<double>(t) - xbar;
    sxy += dx * (y[t] - ybar);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double queue_growth_rate(const Trajectory& traj, std::size_t window) {
  if (window < 2) throw InvalidParameter("growth rate: window must be at least 2");
  if (window > traj.horizon()) {
    throw InvalidParameter(fmt::format("growth rate: window {} exceeds horizon {}",
                                       window, traj.horizon()));
  }
  const std::vector<double> mq = traj.mean_queue();
  return least_squares_slope(std::vector<double>(mq.end() - static_cast<std::ptrdiff_t>(window),
                                                 mq.end()));
}

Trajectory simulate(const Topology& topo, const ChannelMatrix& channel,
                    const FlowSpec& spec, std::size_t horizon, Rng& rng,
                    const Policy& policy) {
  const std::size_t n = topo.size();
  spec.validate(n);
  Trajectory traj;
  traj.destination = spec.destination;
  traj.steps.reserve(horizon);
  QueueState q = QueueState::zeros(n, spec.flows());
  for (std::size_t t = 0; t < horizon; ++t) {
    Tensor a0 = sample_arrivals(spec, rng);
    RoutingDecision dec = policy(t, a0, q);
    QueueState next = step_queues(q, a0, dec, channel, topo, spec);
    TrajectoryStep step;
    step.received = neighbor_inflow(dec.transmit, dec.keep, channel, a0);
    step.slack = constraint_slack(dec, channel, topo, spec);
    step.a0 = std::move(a0);
    step.transmit = std::move(dec.transmit);
    step.packets = std::move(dec.packets);
    step.q = next.q;
    traj.steps.push_back(std::move(step));
    q = std::move(next);
  }
  return traj;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,node,flow,q,a0,a,T,slack\n";
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const TrajectoryStep& s = traj.steps[t];
    const std::size_t n = s.q.dim(0);
    const std::size_t flows = s.q.dim(1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < flows; ++k)
        out += fmt::format("{},{},{},{},{},{},{},{}\n", t, i, k, s.q(i, k), s.a0(i, k),
                           s.packets(i, k), s.transmit(i, k), s.slack(i, k));
  }
  return out;
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << trajectory_csv(traj);
}

}  // namespace oproute
