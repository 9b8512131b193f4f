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

#ifndef OPROUTE_TOPOLOGY_HPP_
#define OPROUTE_TOPOLOGY_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "oproute/tensor.hpp"

namespace oproute {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

using Edge = std::pair<std::size_t, std::size_t>;

// Nodes are 0..n-1. labels keeps the original identifiers of ingested
// graphs. Edges are sorted and unique.
struct Topology {
  std::string name;
  std::vector<std::string> labels;
  std::vector<Point> positions;
  std::vector<Edge> edges;
  std::vector<double> capacity;
  // Neighbor count the edges were built with; 0 for ingested graphs.
  std::size_t knn_k = 0;

  std::size_t size() const noexcept { return positions.size(); }
  bool has_edge(std::size_t i, std::size_t j) const;
  // Throws ContractError when an invariant does not hold.
  void validate() const;
  bool operator==(const Topology&) const = default;
};

inline constexpr double kDefaultCapacity = 100.0;
inline constexpr double kDefaultCutoff = 1.0;

// probs(i, j): probability that i decodes a packet sent by j.
struct ChannelMatrix {
  Tensor probs;
  std::size_t size() const noexcept { return probs.rank() == 2 ? probs.dim(0) : 0; }
};

enum class ArrivalLaw { kConstant, kUniform, kExponential };

std::string to_string(ArrivalLaw law);
ArrivalLaw arrival_law_from_string(const std::string& name);

struct FlowSpec {
  std::vector<std::size_t> destination;
  // (n, F) mean arrivals; zero in each flow's destination row.
  Tensor arrival_mean;
  ArrivalLaw law = ArrivalLaw::kExponential;

  std::size_t flows() const noexcept { return destination.size(); }
  std::size_t nodes() const noexcept {
    return arrival_mean.rank() == 2 ? arrival_mean.dim(0) : 0;
  }
  void validate(std::size_t n) const;
};

// Symmetrized k nearest neighbor graph over n points uniform in the unit
// circle.
Topology generate_knn(std::size_t n, std::size_t k, std::uint64_t seed,
                      double capacity = kDefaultCapacity);

// Symmetrized k nearest neighbor edges for the given positions. Distance
// ties go to the lower node id.
std::vector<Edge> knn_edges(const std::vector<Point>& positions, std::size_t k);

ChannelMatrix channel_from_distance(const Topology& topo,
                                    double cutoff = kDefaultCutoff);

// Displaces ceil(fraction * n) nodes by magnitude times their distance from
// the origin in a uniform direction, then rebuilds k nearest neighbor edges
// when the topology records its k.
Topology perturb(const Topology& topo, double fraction, double magnitude,
                 std::uint64_t seed);

// Destinations are distinct when flows <= n. Each non-destination mean is
// mean * U(1 - spread, 1 + spread); spread = 0 gives the same mean everywhere.
FlowSpec make_flows(std::size_t n, std::size_t flows, double mean,
                    std::uint64_t seed,
                    ArrivalLaw law = ArrivalLaw::kExponential, double spread = 0.0);

FlowSpec make_flows(std::size_t n, std::vector<std::size_t> destinations,
                    double mean, ArrivalLaw law = ArrivalLaw::kExponential);

std::string topology_to_json(const Topology& topo);
Topology topology_from_json(const std::string& text);
void save_topology_json(const Topology& topo, const std::filesystem::path& path);
Topology load_topology_json(const std::filesystem::path& path);

}  // namespace oproute

#endif  // OPROUTE_TOPOLOGY_HPP_
