/*
 * Copyright 2026 The fedsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "fedsim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace fedsim {

namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 70.0;
constexpr double kRight = kWidth - 190.0;  // legend gutter
constexpr double kTop = 44.0;
constexpr double kBottom = kHeight - 52.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#ff7f0e", "#9467bd", "#8c564b",
                                    "#17becf", "#7f7f7f"};

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

void emit_svg(std::span<const Series> series, const std::string& metric_name,
              std::ostream& out) {
  if (series.empty()) throw std::invalid_argument("no series to plot");
  const std::size_t points = series.front().x.size();
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("series x/y length mismatch");
    }
    if (s.x.size() != points) {
      throw std::invalid_argument("all series must share the round axis");
    }
    if (s.x.empty()) throw std::invalid_argument("empty series");
  }

  double x_min = series[0].x[0], x_max = x_min;
  double y_min = series[0].y[0], y_max = y_min;
  for (const Series& s : series) {
    for (double v : s.x) { x_min = std::min(x_min, v); x_max = std::max(x_max, v); }
    for (double v : s.y) { y_min = std::min(y_min, v); y_max = std::max(y_max, v); }
  }
  if (x_max == x_min) { x_min -= 1.0; x_max += 1.0; }
  if (y_max == y_min) { y_min -= 1.0; y_max += 1.0; }
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  auto sx = [&](double v) {
    return kLeft + (v - x_min) / (x_max - x_min) * (kRight - kLeft);
  };
  auto sy = [&](double v) {
    return kBottom - (v - y_min) / (y_max - y_min) * (kBottom - kTop);
  };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << (kLeft + kRight) / 2.0
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << escape_xml(metric_name) << "</text>\n";

  // Axes.
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight
      << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = x_min + (x_max - x_min) * i / kTicks;
    const double px = sx(fx);
    out << "<line x1=\"" << fixed2(px) << "\" y1=\"" << kBottom << "\" x2=\""
        << fixed2(px) << "\" y2=\"" << kBottom + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fixed2(px) << "\" y=\"" << kBottom + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << tick_label(fx) << "</text>\n";
    const double fy = y_min + (y_max - y_min) * i / kTicks;
    const double py = sy(fy);
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fixed2(py) << "\" x2=\""
        << kLeft << "\" y2=\"" << fixed2(py) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << fixed2(py + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << tick_label(fy) << "</text>\n";
  }
  out << "<text x=\"" << (kLeft + kRight) / 2.0 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">round</text>\n";

  // Series polylines.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (i) out << ' ';
      out << fixed2(sx(series[s].x[i])) << ',' << fixed2(sy(series[s].y[i]));
    }
    out << "\"/>\n";
  }

  // Legend.
  const double lx = kRight + 14.0;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double ly = kTop + 18.0 * static_cast<double>(s);
    const char* color = kPalette[s % std::size(kPalette)];
    out << "<line x1=\"" << lx << "\" y1=\"" << fixed2(ly) << "\" x2=\""
        << lx + 22 << "\" y2=\"" << fixed2(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << lx + 28 << "\" y=\"" << fixed2(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape_xml(series[s].label) << "</text>\n";
  }
  out << "</svg>\n";
}

void emit_svg_file(std::span<const Series> series,
                   const std::string& metric_name, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  emit_svg(series, metric_name, out);
}

}  // namespace fedsim
