#pragma once

// Tiny static SVG charts (line overlays and bars) for suite reports.
// No dependencies; output is deliberately plain.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "mee/error.hpp"

namespace mee {

struct Series {
  std::string label;
  std::vector<double> values;  // y per x-index; NaN entries are skipped
};

namespace detail {

inline const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                                 "#bcbd22", "#e377c2"};
inline constexpr std::size_t kPaletteSize = 10;

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

// Overlayed line chart; x is the 1-based index within each series.
inline std::string line_chart_svg(const std::string& title, const std::string& x_label,
                                  const std::string& y_label, const std::vector<Series>& series) {
  if (series.empty()) throw ConfigError("line_chart_svg: no series");
  constexpr double kW = 720, kH = 440, kL = 70, kR = 160, kT = 50, kB = 50;
  const double plot_w = kW - kL - kR, plot_h = kH - kT - kB;

  double lo = 1e300, hi = -1e300;
  std::size_t max_len = 0;
  for (const Series& s : series) {
    max_len = std::max(max_len, s.values.size());
    for (double v : s.values)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  }
  if (max_len < 1 || lo > hi) throw ConfigError("line_chart_svg: nothing to plot");
  if (hi - lo < 1e-12) {
    hi += 0.5;
    lo -= 0.5;
  }

  auto x_at = [&](std::size_t i, std::size_t len) {
    const double t = len > 1 ? static_cast<double>(i) / static_cast<double>(len - 1) : 0.5;
    return kL + t * plot_w;
  };
  auto y_at = [&](double v) { return kT + (hi - v) / (hi - lo) * plot_h; };

  std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" + detail::fmt(kW) +
                    "' height='" + detail::fmt(kH) + "' viewBox='0 0 " + detail::fmt(kW) + " " +
                    detail::fmt(kH) + "'>\n";
  svg += "<rect width='100%' height='100%' fill='white'/>\n";
  svg += "<text x='" + detail::fmt(kW / 2) + "' y='24' text-anchor='middle' font-size='16'>" +
         detail::xml_escape(title) + "</text>\n";
  // Axes
  svg += "<line x1='" + detail::fmt(kL) + "' y1='" + detail::fmt(kT) + "' x2='" + detail::fmt(kL) +
         "' y2='" + detail::fmt(kT + plot_h) + "' stroke='black'/>\n";
  svg += "<line x1='" + detail::fmt(kL) + "' y1='" + detail::fmt(kT + plot_h) + "' x2='" +
         detail::fmt(kL + plot_w) + "' y2='" + detail::fmt(kT + plot_h) + "' stroke='black'/>\n";
  // Extremal tick labels
  svg += "<text x='" + detail::fmt(kL - 6) + "' y='" + detail::fmt(kT + 4) +
         "' text-anchor='end' font-size='11'>" + detail::fmt(hi) + "</text>\n";
  svg += "<text x='" + detail::fmt(kL - 6) + "' y='" + detail::fmt(kT + plot_h + 4) +
         "' text-anchor='end' font-size='11'>" + detail::fmt(lo) + "</text>\n";
  svg += "<text x='" + detail::fmt(kL + plot_w) + "' y='" + detail::fmt(kT + plot_h + 16) +
         "' text-anchor='end' font-size='11'>" + std::to_string(max_len) + "</text>\n";
  svg += "<text x='" + detail::fmt(kL + plot_w / 2) + "' y='" + detail::fmt(kH - 12) +
         "' text-anchor='middle' font-size='12'>" + detail::xml_escape(x_label) + "</text>\n";
  svg += "<text x='18' y='" + detail::fmt(kT + plot_h / 2) + "' font-size='12' transform='rotate(-90 18 " +
         detail::fmt(kT + plot_h / 2) + ")' text-anchor='middle'>" + detail::xml_escape(y_label) +
         "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = detail::kPalette[s % detail::kPaletteSize];
    std::string points;
    for (std::size_t i = 0; i < series[s].values.size(); ++i) {
      const double v = series[s].values[i];
      if (!std::isfinite(v)) continue;
      points += detail::fmt(x_at(i, series[s].values.size())) + "," + detail::fmt(y_at(v)) + " ";
    }
    svg += "<polyline fill='none' stroke='" + std::string(color) + "' stroke-width='1.5' points='" +
           points + "'/>\n";
    const double ly = kT + 16 + 16 * static_cast<double>(s);
    svg += "<line x1='" + detail::fmt(kL + plot_w + 10) + "' y1='" + detail::fmt(ly - 4) + "' x2='" +
           detail::fmt(kL + plot_w + 30) + "' y2='" + detail::fmt(ly - 4) + "' stroke='" + color +
           "' stroke-width='2'/>\n";
    svg += "<text x='" + detail::fmt(kL + plot_w + 34) + "' y='" + detail::fmt(ly) +
           "' font-size='11'>" + detail::xml_escape(series[s].label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

inline std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                                 const std::vector<double>& values) {
  if (labels.size() != values.size() || labels.empty())
    throw ConfigError("bar_chart_svg: labels and values must match and be nonempty");
  constexpr double kW = 720, kH = 440, kL = 70, kR = 30, kT = 50, kB = 110;
  const double plot_w = kW - kL - kR, plot_h = kH - kT - kB;

  double hi = 0.0;
  for (double v : values)
    if (std::isfinite(v)) hi = std::max(hi, v);
  if (hi <= 0.0) hi = 1.0;

  std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" + detail::fmt(kW) +
                    "' height='" + detail::fmt(kH) + "' viewBox='0 0 " + detail::fmt(kW) + " " +
                    detail::fmt(kH) + "'>\n";
  svg += "<rect width='100%' height='100%' fill='white'/>\n";
  svg += "<text x='" + detail::fmt(kW / 2) + "' y='24' text-anchor='middle' font-size='16'>" +
         detail::xml_escape(title) + "</text>\n";
  svg += "<line x1='" + detail::fmt(kL) + "' y1='" + detail::fmt(kT) + "' x2='" + detail::fmt(kL) +
         "' y2='" + detail::fmt(kT + plot_h) + "' stroke='black'/>\n";
  svg += "<line x1='" + detail::fmt(kL) + "' y1='" + detail::fmt(kT + plot_h) + "' x2='" +
         detail::fmt(kL + plot_w) + "' y2='" + detail::fmt(kT + plot_h) + "' stroke='black'/>\n";
  svg += "<text x='" + detail::fmt(kL - 6) + "' y='" + detail::fmt(kT + 4) +
         "' text-anchor='end' font-size='11'>" + detail::fmt(hi) + "</text>\n";

  const double slot = plot_w / static_cast<double>(values.size());
  const double bar_w = slot * 0.6;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::isfinite(values[i]) ? std::max(values[i], 0.0) : 0.0;
    const double h = v / hi * plot_h;
    const double x = kL + slot * (static_cast<double>(i) + 0.2);
    const char* color = detail::kPalette[i % detail::kPaletteSize];
    svg += "<rect x='" + detail::fmt(x) + "' y='" + detail::fmt(kT + plot_h - h) + "' width='" +
           detail::fmt(bar_w) + "' height='" + detail::fmt(h) + "' fill='" + color + "'/>\n";
    svg += "<text x='" + detail::fmt(x + bar_w / 2) + "' y='" + detail::fmt(kT + plot_h - h - 6) +
           "' text-anchor='middle' font-size='11'>" + detail::fmt(values[i]) + "</text>\n";
    const double tx = x + bar_w / 2;
    const double ty = kT + plot_h + 14;
    svg += "<text x='" + detail::fmt(tx) + "' y='" + detail::fmt(ty) +
           "' font-size='10' text-anchor='end' transform='rotate(-35 " + detail::fmt(tx) + " " +
           detail::fmt(ty) + ")'>" + detail::xml_escape(labels[i]) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace mee
