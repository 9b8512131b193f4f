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

#include "oproute/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oproute/errors.hpp"

namespace oproute {

namespace {

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

void normalize_edges(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace

bool Topology::has_edge(std::size_t i, std::size_t j) const {
  return std::binary_search(edges.begin(), edges.end(), Edge{i, j});
}

void Topology::validate() const {
  const std::size_t n = size();
  if (capacity.size() != n) {
    throw ContractError("topology: " + std::to_string(capacity.size()) +
                        " capacities for " + std::to_string(n) + " nodes");
  }
  if (!labels.empty() && labels.size() != n) {
    throw ContractError("topology: label count does not match node count");
  }
  for (const auto& [i, j] : edges) {
    if (i >= n || j >= n) {
      throw ContractError("topology: edge (" + std::to_string(i) + "," +
                          std::to_string(j) + ") references a missing node");
    }
    if (i == j) throw ContractError("topology: self-loop at node " + std::to_string(i));
  }
  if (!std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ContractError("topology: edges must be sorted and unique");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(capacity[i] >= 0.0) || !std::isfinite(capacity[i])) {
      throw ContractError("topology: negative capacity at node " + std::to_string(i));
    }
  }
}

std::string to_string(ArrivalLaw law) {
  switch (law) {
    case ArrivalLaw::kConstant:
      return "constant";
    case ArrivalLaw::kUniform:
      return "uniform";
    case ArrivalLaw::kExponential:
      return "exponential";
  }
  return "exponential";
}

ArrivalLaw arrival_law_from_string(const std::string& name) {
  if (name == "constant") return ArrivalLaw::kConstant;
  if (name == "uniform") return ArrivalLaw::kUniform;
  if (name == "exponential") return ArrivalLaw::kExponential;
  throw InvalidParameter("unknown arrival law '" + name +
                         "' (expected constant, uniform or exponential)");
}

void FlowSpec::validate(std::size_t n) const {
  const std::size_t f = flows();
  if (arrival_mean.shape() != Shape{n, f}) {
    throw ContractError("flows: arrival means have shape " +
                        shape_string(arrival_mean.shape()) + ", expected " +
                        shape_string({n, f}));
  }
  for (std::size_t k = 0; k < f; ++k) {
    if (destination[k] >= n) {
      throw ContractError("flows: destination " + std::to_string(destination[k]) +
                          " of flow " + std::to_string(k) + " is not a node");
    }
    if (arrival_mean(destination[k], k) != 0.0) {
      throw ContractError("flows: destination of flow " + std::to_string(k) +
                          " generates packets");
    }
  }
  for (double m : arrival_mean.data()) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw ContractError("flows: arrival means must be finite and non-negative");
    }
  }
}

std::vector<Edge> knn_edges(const std::vector<Point>& positions, std::size_t k) {
  const std::size_t n = positions.size();
  if (n > 0 && k >= n) {
    throw InvalidParameter("knn: k=" + std::to_string(k) +
                           " must be smaller than n=" + std::to_string(n));
  }
  std::vector<Edge> edges;
  edges.reserve(2 * n * k);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::erase(order, i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return distance(positions[i], positions[a]) < distance(positions[i], positions[b]);
    });
    for (std::size_t r = 0; r < k; ++r) {
      edges.emplace_back(i, order[r]);
      edges.emplace_back(order[r], i);
    }
    order.resize(n);
  }
  normalize_edges(edges);
  return edges;
}

Topology generate_knn(std::size_t n, std::size_t k, std::uint64_t seed,
                      double capacity) {
  if (n == 0) throw InvalidParameter("knn: n must be at least 1");
  if (k >= n) {
    throw InvalidParameter("knn: k=" + std::to_string(k) +
                           " must be smaller than n=" + std::to_string(n));
  }
  if (!(capacity >= 0.0)) throw InvalidParameter("knn: capacity must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Topology topo;
  topo.name = "knn-n" + std::to_string(n) + "-k" + std::to_string(k) + "-s" +
              std::to_string(seed);
  topo.positions.resize(n);
  for (Point& p : topo.positions) {
    const double r = std::sqrt(unit(rng));
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    p = {r * std::cos(theta), r * std::sin(theta)};
  }
  topo.edges = knn_edges(topo.positions, k);
  topo.capacity.assign(n, capacity);
  topo.knn_k = k;
  return topo;
}

ChannelMatrix channel_from_distance(const Topology& topo, double cutoff) {
  if (!(cutoff > 0.0)) {
    throw InvalidParameter("channel: cutoff distance must be positive, got " +
                           std::to_string(cutoff));
  }
  const std::size_t n = topo.size();
  ChannelMatrix ch{Tensor({n, n})};
  for (const auto& [i, j] : topo.edges) {
    const double d = distance(topo.positions[i], topo.positions[j]);
    ch.probs(i, j) = std::max(0.0, 1.0 - d / cutoff);
  }
  return ch;
}

Topology perturb(const Topology& topo, double fraction, double magnitude,
                 std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InvalidParameter("perturb: fraction must lie in [0, 1]");
  }
  if (!(magnitude >= 0.0)) throw InvalidParameter("perturb: magnitude must be >= 0");
  const std::size_t n = topo.size();
  const auto moved = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n) - 1e-12));
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Topology out = topo;
  for (std::size_t r = 0; r < std::min(moved, n); ++r) {
    Point& p = out.positions[order[r]];
    const double radius = std::hypot(p.x, p.y);
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    p.x += magnitude * radius * std::cos(theta);
    p.y += magnitude * radius * std::sin(theta);
  }
  if (topo.knn_k > 0) out.edges = knn_edges(out.positions, topo.knn_k);
  return out;
}

FlowSpec make_flows(std::size_t n, std::vector<std::size_t> destinations,
                    double mean, ArrivalLaw law) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw InvalidParameter("flows: arrival mean must be finite and non-negative");
  }
  FlowSpec spec;
  spec.law = law;
  spec.arrival_mean = Tensor({n, destinations.size()}, mean);
  for (std::size_t k = 0; k < destinations.size(); ++k) {
    if (destinations[k] >= n) {
      throw InvalidParameter("flows: destination " + std::to_string(destinations[k]) +
                             " is not a node");
    }
    spec.arrival_mean(destinations[k], k) = 0.0;
  }
  spec.destination = std::move(destinations);
  return spec;
}

FlowSpec make_flows(std::size_t n, std::size_t flows, double mean,
                    std::uint64_t seed, ArrivalLaw law, double spread) {
  if (n == 0) throw InvalidParameter("flows: empty topology");
  if (!(spread >= 0.0 && spread <= 1.0)) {
    throw InvalidParameter("flows: arrival spread must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> dest;
  if (flows <= n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    dest.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(flows));
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t k = 0; k < flows; ++k) dest.push_back(pick(rng));
  }
  FlowSpec spec = make_flows(n, std::move(dest), mean, law);
  if (spread > 0.0) {
    std::uniform_real_distribution<double> factor(1.0 - spread, 1.0 + spread);
    for (double& v : spec.arrival_mean.data()) v *= factor(rng);
  }
  return spec;
}

std::string topology_to_json(const Topology& topo) {
  nlohmann::json j;
  j["name"] = topo.name;
  j["knn_k"] = topo.knn_k;
  j["labels"] = topo.labels;
  auto& pos = j["positions"] = nlohmann::json::array();
  for (const Point& p : topo.positions) pos.push_back({p.x, p.y});
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : topo.edges) edges.push_back({a, b});
  j["capacity"] = topo.capacity;
  return j.dump(2);
}

Topology topology_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("topology json: ") + e.what(), 0);
  }
  Topology topo;
  try {
    topo.name = j.value("name", "");
    topo.knn_k = j.value("knn_k", std::size_t{0});
    topo.labels = j.value("labels", std::vector<std::string>{});
    for (const auto& p : j.at("positions"))
      topo.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& e : j.at("edges"))
      topo.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    topo.capacity = j.at("capacity").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("topology json: ") + e.what(), 0);
  }
  normalize_edges(topo.edges);
  topo.validate();
  return topo;
}

void save_topology_json(const Topology& topo, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << topology_to_json(topo) << '\n';
}

Topology load_topology_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return topology_from_json(buf.str());
}

}  // namespace oproute
