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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "oproute/errors.hpp"

namespace oproute {
namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 180.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 52.0;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

// Roughly five round tick values covering [lo, hi].
std::vector<double> ticks(Range& r) {
  if (!(r.hi > r.lo)) {
    const double pad = r.lo == 0.0 ? 1.0 : std::abs(r.lo) * 0.1;
    r.lo -= pad;
    r.hi += pad;
  }
  const double raw = (r.hi - r.lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  r.lo = std::floor(r.lo / step) * step;
  r.hi = std::ceil(r.hi / step) * step;
  std::vector<double> out;
  for (double v = r.lo; v <= r.hi + step * 1e-9; v += step) out.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
  return out;
}

bool keep_row(const CsvTable& t, std::size_t row, std::optional<std::size_t> where_col,
              const std::string& where_value) {
  return !where_col || t.rows[row][*where_col] == where_value;
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ContractError("csv: no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

std::optional<double> CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& cell = rows.at(row).at(col);
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ParseError(fmt::format("csv: line {} has {} cells, header has {}", lineno,
                                   cells.size(), t.header.size()),
                       lineno);
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError("csv: missing header", 0);
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_text_file(path));
}

std::string line_chart_svg(const CsvTable& table, const LineChartSpec& spec) {
  if (spec.y.empty()) throw InvalidParameter("chart: no y columns");
  const std::size_t xc = table.column(spec.x);
  std::vector<std::size_t> ycs;
  for (const auto& y : spec.y) ycs.push_back(table.column(y));
  std::optional<std::size_t> gc;
  if (!spec.group.empty()) gc = table.column(spec.group);
  std::optional<std::size_t> wc;
  if (!spec.where_column.empty()) wc = table.column(spec.where_column);

  // Series keyed by (y column, group value) in first-seen order.
  std::vector<Series> series;
  std::map<std::pair<std::size_t, std::string>, std::size_t> index;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (!keep_row(table, r, wc, spec.where_value)) continue;
    const auto x = table.number(r, xc);
    if (!x || !std::isfinite(*x)) continue;
    const std::string g = gc ? table.rows[r][*gc] : std::string();
    for (std::size_t yi = 0; yi < ycs.size(); ++yi) {
      auto y = table.number(r, ycs[yi]);
      if (!y || !std::isfinite(*y)) continue;
      if (spec.log_y) {
        if (*y <= 0.0) continue;
        y = std::log10(*y);
      }
      const auto key = std::make_pair(yi, g);
      auto it = index.find(key);
      if (it == index.end()) {
        std::string label = spec.y[yi];
        if (gc) label = spec.y.size() == 1 ? spec.group + " " + g : label + " " + spec.group + " " + g;
        it = index.emplace(key, series.size()).first;
        series.push_back(Series{label, {}});
      }
      series[it->second].points.emplace_back(*x, *y);
    }
  }

  Range xr{0.0, 0.0}, yr{0.0, 0.0};
  bool first = true;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (first) {
        xr = {x, x};
        yr = {y, y};
        first = false;
      }
      xr.lo = std::min(xr.lo, x);
      xr.hi = std::max(xr.hi, x);
      yr.lo = std::min(yr.lo, y);
      yr.hi = std::max(yr.hi, y);
    }
  const auto xt = ticks(xr);
  const auto yt = ticks(yr);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  out += fmt::format("<text x=\"{:.2f}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                     kLeft + pw / 2, escape(spec.title));
  for (double v : xt) {
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#e0e0e0\"/>\n"
        "<text x=\"{0:.2f}\" y=\"{3:.2f}\" text-anchor=\"middle\">{4:g}</text>\n",
        px(v), kTop, kTop + ph, kTop + ph + 16, v);
  }
  for (double v : yt) {
    const std::string label = spec.log_y ? fmt::format("{:g}", std::pow(10.0, v)) : fmt::format("{:g}", v);
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#e0e0e0\"/>\n"
        "<text x=\"{3:.2f}\" y=\"{4:.2f}\" text-anchor=\"end\">{5}</text>\n",
        kLeft, py(v), kLeft + pw, kLeft - 6, py(v) + 4, label);
  }
  out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
                     "fill=\"none\" stroke=\"black\"/>\n",
                     kLeft, kTop, pw, ph);
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                     kLeft + pw / 2, kHeight - 12, escape(spec.x_label.empty() ? spec.x : spec.x_label));
  const std::string ylab = spec.y_label.empty() ? (spec.y.size() == 1 ? spec.y[0] : "") : spec.y_label;
  out += fmt::format("<text transform=\"translate(18 {:.2f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                     kTop + ph / 2, escape(ylab));

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    std::string pts;
    for (const auto& [x, y] : series[s].points)
      pts += fmt::format("{}{:.2f},{:.2f}", pts.empty() ? "" : " ", px(x), py(y));
    if (series[s].points.size() == 1) {
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n",
                         px(series[s].points[0].first), py(series[s].points[0].second), color);
    } else {
      out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                         color, pts);
    }
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(s);
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" stroke-width=\"2\"/>\n"
        "<text x=\"{4:.2f}\" y=\"{5:.2f}\">{6}</text>\n",
        kLeft + pw + 12, ly, kLeft + pw + 32, color, kLeft + pw + 38, ly + 4,
        escape(series[s].label));
  }
  out += "</svg>\n";
  return out;
}

std::string route_map_svg(const CsvTable& nodes, const CsvTable& edges, const RouteMapSpec& spec) {
  const std::size_t nc = nodes.column("node");
  const std::size_t xc = nodes.column("x");
  const std::size_t yc = nodes.column("y");
  const std::size_t ic = nodes.column(spec.intensity);
  std::optional<std::size_t> nw, ew;
  if (!spec.where_column.empty()) {
    nw = nodes.column(spec.where_column);
    if (edges.has_column(spec.where_column)) ew = edges.column(spec.where_column);
  }
  struct Dot {
    double x, y, v;
    std::string id;
  };
  std::map<std::string, Dot> dots;
  for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
    if (!keep_row(nodes, r, nw, spec.where_value)) continue;
    const auto x = nodes.number(r, xc);
    const auto y = nodes.number(r, yc);
    if (!x || !y) continue;
    const double v = std::clamp(nodes.number(r, ic).value_or(0.0), 0.0, 1.0);
    dots[nodes.rows[r][nc]] = Dot{*x, *y, v, nodes.rows[r][nc]};
  }
  Range xr{-1.0, 1.0}, yr{-1.0, 1.0};
  if (!dots.empty()) {
    xr = {dots.begin()->second.x, dots.begin()->second.x};
    yr = {dots.begin()->second.y, dots.begin()->second.y};
    for (const auto& [id, d] : dots) {
      xr.lo = std::min(xr.lo, d.x);
      xr.hi = std::max(xr.hi, d.x);
      yr.lo = std::min(yr.lo, d.y);
      yr.hi = std::max(yr.hi, d.y);
    }
  }
  const double size = 520.0;
  const double pad = 40.0;
  const double span = std::max({xr.hi - xr.lo, yr.hi - yr.lo, 1e-12});
  auto px = [&](double x) { return pad + (x - xr.lo) / span * (size - 2 * pad); };
  auto py = [&](double y) { return size - pad - (y - yr.lo) / span * (size - 2 * pad); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{3}</text>\n",
      size, size + 30.0, size / 2, escape(spec.title));
  const std::size_t fc = edges.column("from");
  const std::size_t tc = edges.column("to");
  for (std::size_t r = 0; r < edges.rows.size(); ++r) {
    if (!keep_row(edges, r, ew, spec.where_value)) continue;
    const auto a = dots.find(edges.rows[r][fc]);
    const auto b = dots.find(edges.rows[r][tc]);
    if (a == dots.end() || b == dots.end()) continue;
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" "
                       "stroke=\"#b0b0b0\" stroke-width=\"1\"/>\n",
                       px(a->second.x), py(a->second.y), px(b->second.x), py(b->second.y));
  }
  for (const auto& [id, d] : dots) {
    const int red = static_cast<int>(std::lround(255.0 * d.v));
    const int blue = 255 - red;
    out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{:.2f}\" fill=\"rgb({},64,{})\" "
                       "stroke=\"black\" stroke-width=\"0.5\"><title>{} {:.3f}</title></circle>\n",
                       px(d.x), py(d.y), 5.0 + 9.0 * d.v, red, blue, escape(d.id), d.v);
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">node colour and size: {}</text>\n",
                     size / 2, size + 18.0, escape(spec.intensity));
  out += "</svg>\n";
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oproute
