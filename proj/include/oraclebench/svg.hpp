// Copyright 2026 The OracleBench Authors.
//
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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "oraclebench/common.hpp"

namespace oraclebench {

/// Standalone SVG charts, no external assets. Covers the plot kinds the CLI
/// emits: line/marker series on linear or log axes, one optional dashed fit
/// line with an annotation, histogram bars, and an optional vertical marker.
struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool draw_line = true;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
  // dashed y = a + b*x in axis space (log10 space when the axis is log)
  std::optional<std::pair<double, double>> fit_intercept_slope;
  std::string annotation;  // drawn top-right
  std::vector<std::pair<double, double>> bars;  // (center, height)
  std::optional<double> vline;
};

namespace detail {

inline std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

inline const char* series_color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  return palette[i % 6];
}

}  // namespace detail

inline std::string emit_svg(const PlotSpec& spec) {
  const double width = 640, height = 420;
  const double ml = 62, mr = 18, mt = 34, mb = 46;
  const double pw = width - ml - mr, ph = height - mt - mb;

  auto axis_value = [](double v, bool log_axis) {
    if (!log_axis) return v;
    require(v > 0.0, "emit_svg: log axis requires positive values");
    return std::log10(v);
  };

  // data range across series, bars, vline
  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  auto grow = [&](double x, double y) {
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  };
  for (const auto& s : spec.series)
    for (const auto& [x, y] : s.points)
      grow(axis_value(x, spec.log_x), axis_value(y, spec.log_y));
  for (const auto& [x, h] : spec.bars) {
    grow(axis_value(x, spec.log_x), axis_value(std::max(h, 1e-12), spec.log_y));
    grow(axis_value(x, spec.log_x), axis_value(1e-12, false));
  }
  if (spec.vline) grow(axis_value(*spec.vline, spec.log_x), y_min == 1e300 ? 0.0 : y_min);
  require(x_min <= x_max && y_min <= y_max, "emit_svg: no data");
  if (x_max - x_min < 1e-12) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const double x_pad = 0.04 * (x_max - x_min), y_pad = 0.06 * (y_max - y_min);
  x_min -= x_pad;
  x_max += x_pad;
  y_min -= y_pad;
  y_max += y_pad;

  auto px = [&](double v) { return ml + (v - x_min) / (x_max - x_min) * pw; };
  auto py = [&](double v) { return mt + ph - (v - y_min) / (y_max - y_min) * ph; };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
         "viewBox=\"0 0 640 420\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"420\" fill=\"white\"/>\n";

  // axes
  out += "<g stroke=\"#333\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + detail::fmt_coord(ml) + "\" y1=\"" + detail::fmt_coord(mt + ph) +
         "\" x2=\"" + detail::fmt_coord(ml + pw) + "\" y2=\"" + detail::fmt_coord(mt + ph) +
         "\"/>\n";
  out += "<line x1=\"" + detail::fmt_coord(ml) + "\" y1=\"" + detail::fmt_coord(mt) +
         "\" x2=\"" + detail::fmt_coord(ml) + "\" y2=\"" + detail::fmt_coord(mt + ph) +
         "\"/>\n";
  out += "</g>\n";

  // ticks and labels
  out += "<g fill=\"#333\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double vx = x_min + (x_max - x_min) * i / 4.0;
    const double vy = y_min + (y_max - y_min) * i / 4.0;
    const double label_x = spec.log_x ? std::pow(10.0, vx) : vx;
    const double label_y = spec.log_y ? std::pow(10.0, vy) : vy;
    out += "<text x=\"" + detail::fmt_coord(px(vx)) + "\" y=\"" +
           detail::fmt_coord(mt + ph + 16) + "\" text-anchor=\"middle\">" +
           detail::fmt_tick(label_x) + "</text>\n";
    out += "<text x=\"" + detail::fmt_coord(ml - 6) + "\" y=\"" +
           detail::fmt_coord(py(vy) + 4) + "\" text-anchor=\"end\">" +
           detail::fmt_tick(label_y) + "</text>\n";
  }
  out += "<text x=\"" + detail::fmt_coord(ml + pw / 2) + "\" y=\"" +
         detail::fmt_coord(height - 8) + "\" text-anchor=\"middle\">" + spec.x_label +
         "</text>\n";
  out += "<text x=\"14\" y=\"" + detail::fmt_coord(mt + ph / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
         detail::fmt_coord(mt + ph / 2) + ")\">" + spec.y_label + "</text>\n";
  out += "<text x=\"" + detail::fmt_coord(ml + pw / 2) + "\" y=\"20\" text-anchor=\"middle\" "
         "font-size=\"13\">" + spec.title + "</text>\n";
  out += "</g>\n";

  // histogram bars
  if (!spec.bars.empty()) {
    double bar_w = pw / static_cast<double>(spec.bars.size()) * 0.86;
    out += "<g fill=\"#7fb3d3\" stroke=\"#336\" stroke-width=\"0.5\">\n";
    for (const auto& [x, h] : spec.bars) {
      const double cx = px(axis_value(x, spec.log_x));
      const double top = py(axis_value(std::max(h, 1e-12), spec.log_y));
      const double base = py(y_min + y_pad);
      out += "<rect x=\"" + detail::fmt_coord(cx - bar_w / 2) + "\" y=\"" +
             detail::fmt_coord(top) + "\" width=\"" + detail::fmt_coord(bar_w) +
             "\" height=\"" + detail::fmt_coord(std::max(0.0, base - top)) + "\"/>\n";
    }
    out += "</g>\n";
  }

  // series: one group per non-empty series (empty series emit nothing)
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const PlotSeries& s = spec.series[si];
    if (s.points.empty()) continue;
    const char* color = detail::series_color(si);
    out += std::string("<g fill=\"") + color + "\" stroke=\"" + color + "\">\n";
    if (s.draw_line && s.points.size() > 1) {
      std::string pts;
      for (const auto& [x, y] : s.points) {
        pts += detail::fmt_coord(px(axis_value(x, spec.log_x))) + "," +
               detail::fmt_coord(py(axis_value(y, spec.log_y))) + " ";
      }
      out += "<polyline fill=\"none\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    }
    for (const auto& [x, y] : s.points) {
      out += "<circle cx=\"" + detail::fmt_coord(px(axis_value(x, spec.log_x))) + "\" cy=\"" +
             detail::fmt_coord(py(axis_value(y, spec.log_y))) + "\" r=\"3\"/>\n";
    }
    if (!s.name.empty()) {
      out += "<text x=\"" + detail::fmt_coord(ml + pw - 8) + "\" y=\"" +
             detail::fmt_coord(mt + 14 + 14 * static_cast<double>(si)) +
             "\" text-anchor=\"end\" stroke=\"none\">" + s.name + "</text>\n";
    }
    out += "</g>\n";
  }

  // dashed fit line across the full x range
  if (spec.fit_intercept_slope) {
    const auto [a, b] = *spec.fit_intercept_slope;
    const double yl = a + b * (x_min + x_pad), yr = a + b * (x_max - x_pad);
    out += "<line stroke=\"#555\" stroke-width=\"1.2\" stroke-dasharray=\"6 4\" x1=\"" +
           detail::fmt_coord(px(x_min + x_pad)) + "\" y1=\"" + detail::fmt_coord(py(yl)) +
           "\" x2=\"" + detail::fmt_coord(px(x_max - x_pad)) + "\" y2=\"" +
           detail::fmt_coord(py(yr)) + "\"/>\n";
  }

  if (spec.vline) {
    const double vx = px(axis_value(*spec.vline, spec.log_x));
    out += "<line stroke=\"#d62728\" stroke-width=\"1.2\" stroke-dasharray=\"4 3\" x1=\"" +
           detail::fmt_coord(vx) + "\" y1=\"" + detail::fmt_coord(mt) + "\" x2=\"" +
           detail::fmt_coord(vx) + "\" y2=\"" + detail::fmt_coord(mt + ph) + "\"/>\n";
  }

  if (!spec.annotation.empty()) {
    out += "<text x=\"" + detail::fmt_coord(ml + 10) + "\" y=\"" + detail::fmt_coord(mt + 16) +
           "\" fill=\"#333\">" + spec.annotation + "</text>\n";
  }

  out += "</svg>\n";
  return out;
}

inline std::string format_alpha_annotation(double alpha) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "alpha = %.3f", alpha);
  return buf;
}

}  // namespace oraclebench
