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

#ifndef OPROUTE_GRAPHML_HPP_
#define OPROUTE_GRAPHML_HPP_

#include <filesystem>
#include <string>
#include <utility>

#include "oproute/topology.hpp"

namespace oproute {

// Reads node coordinates from Longitude/Latitude or x/y data keys. Both axes
// are shifted to start at 0 and divided by the larger of the two spans, so
// the layout keeps its aspect ratio and fits the unit square. Edges are
// deduplicated, self-loops dropped, and the edge set symmetrized.
std::pair<Topology, ChannelMatrix> load_graphml(
    const std::filesystem::path& path, double cutoff = kDefaultCutoff,
    double capacity = kDefaultCapacity);

std::pair<Topology, ChannelMatrix> parse_graphml(
    const std::string& text, const std::string& name,
    double cutoff = kDefaultCutoff, double capacity = kDefaultCapacity);

// Writes x/y coordinates and one <edge> per unordered pair.
std::string to_graphml(const Topology& topo);
void save_graphml(const Topology& topo, const std::filesystem::path& path);

}  // namespace oproute

#endif  // OPROUTE_GRAPHML_HPP_
