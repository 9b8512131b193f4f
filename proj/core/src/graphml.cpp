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

#include "oproute/graphml.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>

#include "oproute/errors.hpp"

namespace oproute {

namespace pt = boost::property_tree;

namespace {

std::optional<double> parse_double(const std::string& s) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

// '/' separated, since GraphML attribute names such as attr.name contain dots.
std::string attr(const pt::ptree& node, const char* name) {
  return node.get<std::string>(pt::ptree::path_type(std::string("<xmlattr>/") + name, '/'), "");
}

// Lower-cased attribute name -> key id, for keys that apply to nodes.
std::map<std::string, std::string> node_keys(const pt::ptree& root) {
  std::map<std::string, std::string> keys;
  for (const auto& [tag, child] : root) {
    if (tag != "key") continue;
    const std::string scope = attr(child, "for");
    if (!scope.empty() && scope != "node" && scope != "all") continue;
    std::string name = attr(child, "attr.name");
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    keys[name] = attr(child, "id");
  }
  return keys;
}

}  // namespace

std::pair<Topology, ChannelMatrix> parse_graphml(const std::string& text,
                                                 const std::string& name,
                                                 double cutoff, double capacity) {
  pt::ptree doc;
  std::istringstream in(text);
  try {
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(fmt::format("{}: line {}: {}", name, e.line(), e.message()),
                     e.line());
  }
  const auto root_it = doc.find("graphml");
  if (root_it == doc.not_found()) throw IngestError(name + ": no <graphml> element");
  const pt::ptree& root = root_it->second;
  const auto graph_it = root.find("graph");
  if (graph_it == root.not_found()) throw IngestError(name + ": no <graph> element");
  const pt::ptree& graph = graph_it->second;

  const auto keys = node_keys(root);
  auto key_for = [&](std::initializer_list<const char*> names) -> std::string {
    for (const char* n : names) {
      auto it = keys.find(n);
      if (it != keys.end()) return it->second;
    }
    return {};
  };
  std::string kx = key_for({"longitude"});
  std::string ky = key_for({"latitude"});
  if (kx.empty() || ky.empty()) {
    kx = key_for({"x"});
    ky = key_for({"y"});
  }

  Topology topo;
  topo.name = name;
  std::map<std::string, std::size_t> index;
  std::vector<std::pair<std::string, std::string>> raw_edges;
  for (const auto& [tag, child] : graph) {
    if (tag == "node") {
      const std::string id = attr(child, "id");
      if (id.empty()) throw IngestError(name + ": <node> without id");
      if (index.count(id) != 0) throw IngestError(name + ": duplicate node id '" + id + "'");
      std::optional<double> x, y;
      for (const auto& [dtag, data] : child) {
        if (dtag != "data") continue;
        const std::string key = attr(data, "key");
        if (!kx.empty() && key == kx) x = parse_double(data.data());
        if (!ky.empty() && key == ky) y = parse_double(data.data());
      }
      if (!x || !y) {
        throw IngestError(name + ": node '" + id + "' has no usable coordinates");
      }
      index[id] = topo.labels.size();
      topo.labels.push_back(id);
      topo.positions.push_back({*x, *y});
    } else if (tag == "edge") {
      raw_edges.emplace_back(attr(child, "source"), attr(child, "target"));
    }
  }
  for (const auto& [s, t] : raw_edges) {
    auto si = index.find(s);
    auto ti = index.find(t);
    if (si == index.end() || ti == index.end()) {
      throw IngestError(name + ": edge " + s + " -> " + t + " references a missing node");
    }
    if (si->second == ti->second) continue;
    topo.edges.emplace_back(si->second, ti->second);
    topo.edges.emplace_back(ti->second, si->second);
  }
  std::sort(topo.edges.begin(), topo.edges.end());
  topo.edges.erase(std::unique(topo.edges.begin(), topo.edges.end()), topo.edges.end());

  if (!topo.positions.empty()) {
    double xmin = topo.positions[0].x, xmax = xmin;
    double ymin = topo.positions[0].y, ymax = ymin;
    for (const Point& p : topo.positions) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double span = std::max(xmax - xmin, ymax - ymin);
    for (Point& p : topo.positions) {
      p.x = span > 0.0 ? (p.x - xmin) / span : 0.0;
      p.y = span > 0.0 ? (p.y - ymin) / span : 0.0;
    }
  }
  topo.capacity.assign(topo.size(), capacity);
  topo.validate();
  ChannelMatrix ch = channel_from_distance(topo, cutoff);
  return {std::move(topo), std::move(ch)};
}

std::pair<Topology, ChannelMatrix> load_graphml(const std::filesystem::path& path,
                                                double cutoff, double capacity) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_graphml(buf.str(), path.stem().string(), cutoff, capacity);
}

std::string to_graphml(const Topology& topo) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n"
      "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      "  <key attr.name=\"x\" attr.type=\"double\" for=\"node\" id=\"x\"/>\n"
      "  <key attr.name=\"y\" attr.type=\"double\" for=\"node\" id=\"y\"/>\n"
      "  <graph edgedefault=\"undirected\">\n";
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const std::string id = topo.labels.empty() ? std::to_string(i) : topo.labels[i];
    out += fmt::format(
        "    <node id=\"{}\">\n      <data key=\"x\">{:.17g}</data>\n"
        "      <data key=\"y\">{:.17g}</data>\n    </node>\n",
        id, topo.positions[i].x, topo.positions[i].y);
  }
  for (const auto& [i, j] : topo.edges) {
    if (i > j && topo.has_edge(j, i)) continue;
    const std::string a = topo.labels.empty() ? std::to_string(i) : topo.labels[i];
    const std::string b = topo.labels.empty() ? std::to_string(j) : topo.labels[j];
    out += fmt::format("    <edge source=\"{}\" target=\"{}\"/>\n", a, b);
  }
  out += "  </graph>\n</graphml>\n";
  return out;
}

void save_graphml(const Topology& topo, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_graphml(topo);
}

}  // namespace oproute
