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

// Static SVG charts rendered from CSV text.
//
// The renderers take only CSV content, never simulation objects, so every
// chart can be rebuilt from the files an experiment emitted.

#ifndef OPROUTE_CHARTS_HPP_
#define OPROUTE_CHARTS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace oproute {

// Comma separated table with a header row. No quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws ContractError naming the missing column.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  // Empty cells and unparsable values come back as nullopt.
  std::optional<double> number(std::size_t row, std::size_t col) const;
};

// Throws ParseError with the offending line when a row has the wrong width.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

struct LineChartSpec {
  std::string title;
  std::string x;
  std::vector<std::string> y;
  // Optional: one series per distinct value of this column and y entry.
  std::string group;
  // Optional row filter, column == value compared as text.
  std::string where_column;
  std::string where_value;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

std::string line_chart_svg(const CsvTable& table, const LineChartSpec& spec);

struct RouteMapSpec {
  std::string title;
  // nodes table: node, x, y and the intensity column in [0, 1].
  std::string intensity = "normalized";
  std::string where_column;
  std::string where_value;
};

// nodes: node,x,y,<intensity>; edges: from,to[,prob]. Filters apply to both.
std::string route_map_svg(const CsvTable& nodes, const CsvTable& edges,
                          const RouteMapSpec& spec);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace oproute

#endif  // OPROUTE_CHARTS_HPP_
