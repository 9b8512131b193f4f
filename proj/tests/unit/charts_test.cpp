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

#include "oproute/charts.hpp"

#include <string>

#include <gtest/gtest.h>

#include "oproute/errors.hpp"

namespace oproute {
namespace {

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1))
    ++n;
  return n;
}

const char* kSeries =
    "seed,t,a,b\n"
    "1,0,1,4\n"
    "1,1,2,3\n"
    "1,2,3,\n"
    "2,0,5,1\n"
    "2,1,6,1\n";

TEST(Csv, ParsesHeaderRowsAndEmptyCells) {
  const CsvTable t = parse_csv(kSeries);
  EXPECT_EQ(t.header, (std::vector<std::string>{"seed", "t", "a", "b"}));
  ASSERT_EQ(t.rows.size(), 5u);
  EXPECT_EQ(t.number(0, 2), 1.0);
  EXPECT_FALSE(t.number(2, 3).has_value());
  EXPECT_EQ(t.column("b"), 3u);
  EXPECT_TRUE(t.has_column("t"));
  EXPECT_THROW(t.column("c"), ContractError);
}

TEST(Csv, WrongWidthReportsLine) {
  try {
    parse_csv("a,b\n1,2\n3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_csv(""), ParseError);
}

TEST(Csv, NonNumericCellIsNullopt) {
  const CsvTable t = parse_csv("a\nx\n1e-3\n");
  EXPECT_FALSE(t.number(0, 0).has_value());
  EXPECT_EQ(t.number(1, 0), 1e-3);
}

TEST(LineChart, OnePolylinePerSeries) {
  const CsvTable t = parse_csv(kSeries);
  const std::string svg = line_chart_svg(t, {.title = "x", .x = "t", .y = {"a", "b"}});
  EXPECT_EQ(count(svg, "<polyline"), 2u);
  const std::string grouped =
      line_chart_svg(t, {.title = "x", .x = "t", .y = {"a", "b"}, .group = "seed"});
  EXPECT_EQ(count(grouped, "<polyline"), 4u);
  EXPECT_NE(grouped.find("a seed 2"), std::string::npos);
}

TEST(LineChart, FilterKeepsMatchingRows) {
  const CsvTable t = parse_csv(kSeries);
  LineChartSpec spec{.title = "x", .x = "t", .y = {"a"}, .where_column = "seed", .where_value = "2"};
  const std::string svg = line_chart_svg(t, spec);
  EXPECT_EQ(count(svg, "<polyline"), 1u);
  const auto pts = svg.substr(svg.find("points=\""));
  EXPECT_EQ(count(pts.substr(0, pts.find("\"/>")), ","), 2u);
}

TEST(LineChart, SinglePointIsACircle) {
  const CsvTable t = parse_csv("x,y\n3,7\n");
  const std::string svg = line_chart_svg(t, {.title = "x", .x = "x", .y = {"y"}});
  EXPECT_EQ(count(svg, "<circle"), 1u);
  EXPECT_EQ(count(svg, "<polyline"), 0u);
}

TEST(LineChart, DeterministicAndEscaped) {
  const CsvTable t = parse_csv(kSeries);
  LineChartSpec spec{.title = "a < b & c", .x = "t", .y = {"a"}};
  EXPECT_EQ(line_chart_svg(t, spec), line_chart_svg(t, spec));
  EXPECT_NE(line_chart_svg(t, spec).find("a &lt; b &amp; c"), std::string::npos);
}

TEST(LineChart, UnknownColumnThrows) {
  const CsvTable t = parse_csv(kSeries);
  EXPECT_THROW(line_chart_svg(t, {.title = "x", .x = "t", .y = {"zzz"}}), ContractError);
  EXPECT_THROW(line_chart_svg(t, {.title = "x", .x = "t", .y = {}}), InvalidParameter);
}

TEST(LineChart, LogAxisDropsNonPositive) {
  const CsvTable t = parse_csv("x,y\n0,1\n1,0\n2,100\n");
  LineChartSpec spec{.title = "x", .x = "x", .y = {"y"}};
  spec.log_y = true;
  const std::string svg = line_chart_svg(t, spec);
  const auto pts = svg.substr(svg.find("points=\""));
  EXPECT_EQ(count(pts.substr(0, pts.find("\"/>")), ","), 2u);
}

TEST(RouteMap, DrawsFilteredNodesAndEdges) {
  const CsvTable nodes = parse_csv(
      "flow,node,x,y,normalized\n"
      "0,0,0,0,1\n0,1,1,0,0\n0,2,0,1,0.5\n"
      "1,0,0,0,0\n1,1,1,0,1\n1,2,0,1,0\n");
  const CsvTable edges = parse_csv("from,to\n0,1\n1,2\n2,7\n");
  RouteMapSpec spec{.title = "m", .intensity = "normalized", .where_column = "flow",
                    .where_value = "0"};
  const std::string svg = route_map_svg(nodes, edges, spec);
  EXPECT_EQ(count(svg, "<circle"), 3u);
  EXPECT_EQ(count(svg, "<line"), 2u);
  EXPECT_NE(svg.find("fill=\"rgb(255,64,0)\""), std::string::npos);
  EXPECT_NE(svg.find("fill=\"rgb(0,64,255)\""), std::string::npos);
}

}  // namespace
}  // namespace oproute
