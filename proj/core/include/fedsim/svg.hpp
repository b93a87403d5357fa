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
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fedsim {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Writes a standalone SVG line chart: one polyline per series, labeled axes
/// with ticks, and a legend. Output bytes are a pure function of the input.
/// All series must share the same x axis.
void emit_svg(std::span<const Series> series, const std::string& metric_name,
              std::ostream& out);

void emit_svg_file(std::span<const Series> series,
                   const std::string& metric_name,
                   const std::string& path);

}  // namespace fedsim
