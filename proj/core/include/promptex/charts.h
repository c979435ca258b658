// Copyright 2026 The Promptex Authors
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

// Self-contained SVG line and bar charts for report figures.

#ifndef PROMPTEX_CHARTS_H_
#define PROMPTEX_CHARTS_H_

#include <string>
#include <vector>

namespace promptex::charts {

struct LineSeries {
  std::string name;
  std::vector<double> y;
  // Optional band; when non-empty both must match y in length.
  std::vector<double> lower;
  std::vector<double> upper;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> x_ticks;  // Categorical, evenly spaced.
  std::vector<LineSeries> series;
  double y_min = 0.0;
  double y_max = 1.0;
};

struct BarChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> labels;
  std::vector<double> values;
  // Optional error bars; when non-empty both must match values in length.
  std::vector<double> lower;
  std::vector<double> upper;
  double y_min = 0.0;
  double y_max = 1.0;
};

// Throws std::invalid_argument on length mismatches.
std::string RenderSvg(const LineChart& chart);
std::string RenderSvg(const BarChart& chart);

}  // namespace promptex::charts

#endif  // PROMPTEX_CHARTS_H_
