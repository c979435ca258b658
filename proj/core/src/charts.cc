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

#include "promptex/charts.h"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace promptex::charts {
namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 70;
constexpr double kRight = 150;
constexpr double kTop = 40;
constexpr double kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string Escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

struct Frame {
  double y_min;
  double y_max;
  double plot_w() const { return kWidth - kLeft - kRight; }
  double plot_h() const { return kHeight - kTop - kBottom; }
  double Y(double v) const {
    const double span = y_max > y_min ? y_max - y_min : 1.0;
    const double t = std::clamp((v - y_min) / span, 0.0, 1.0);
    return kTop + plot_h() * (1.0 - t);
  }
};

std::string Header(const std::string& title, const std::string& x_label,
                   const std::string& y_label, const Frame& f) {
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  out += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                     kLeft + f.plot_w() / 2, Escape(title));
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                     kLeft + f.plot_w() / 2, kHeight - 15, Escape(x_label));
  out += fmt::format(
      "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
      kTop + f.plot_h() / 2, Escape(y_label));
  for (int i = 0; i <= 4; ++i) {
    const double v = f.y_min + (f.y_max - f.y_min) * i / 4.0;
    const double y = f.Y(v);
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#ddd\"/>\n"
        "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:.2f}</text>\n",
        kLeft, y, kLeft + f.plot_w(), kLeft - 6, y + 4, v);
  }
  out += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{2}\" x2=\"{3}\" y2=\"{2}\" stroke=\"black\"/>\n",
      kLeft, kTop, kTop + f.plot_h(), kLeft + f.plot_w());
  return out;
}

void CheckBand(size_t n, const std::vector<double>& lower, const std::vector<double>& upper) {
  if (lower.empty() && upper.empty()) return;
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("band length does not match the series");
  }
}

}  // namespace

std::string RenderSvg(const LineChart& chart) {
  const Frame f{chart.y_min, chart.y_max};
  const size_t n = chart.x_ticks.size();
  auto x_at = [&](size_t i) {
    return n <= 1 ? kLeft + f.plot_w() / 2 : kLeft + f.plot_w() * i / (n - 1.0);
  };
  std::string out = Header(chart.title, chart.x_label, chart.y_label, f);
  for (size_t i = 0; i < n; ++i) {
    out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x_at(i),
                       kTop + f.plot_h() + 18, Escape(chart.x_ticks[i]));
  }
  for (size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    if (series.y.size() != n) throw std::invalid_argument("series length does not match ticks");
    CheckBand(n, series.lower, series.upper);
    const char* color = kPalette[s % std::size(kPalette)];
    if (!series.lower.empty() && n > 0) {
      std::string points;
      for (size_t i = 0; i < n; ++i) {
        points += fmt::format("{:.2f},{:.2f} ", x_at(i), f.Y(series.upper[i]));
      }
      for (size_t i = n; i-- > 0;) {
        points += fmt::format("{:.2f},{:.2f} ", x_at(i), f.Y(series.lower[i]));
      }
      out += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n",
                         points, color);
    }
    std::string points;
    for (size_t i = 0; i < n; ++i) {
      points += fmt::format("{:.2f},{:.2f} ", x_at(i), f.Y(series.y[i]));
    }
    out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       points, color);
    for (size_t i = 0; i < n; ++i) {
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", x_at(i),
                         f.Y(series.y[i]), color);
    }
    const double ly = kTop + 10 + 18.0 * s;
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n"
        "<text x=\"{4}\" y=\"{5}\">{6}</text>\n",
        kWidth - kRight + 12, ly, kWidth - kRight + 32, color, kWidth - kRight + 38, ly + 4,
        Escape(series.name));
  }
  out += "</svg>\n";
  return out;
}

std::string RenderSvg(const BarChart& chart) {
  const size_t n = chart.labels.size();
  if (chart.values.size() != n) throw std::invalid_argument("values do not match labels");
  CheckBand(n, chart.lower, chart.upper);
  const Frame f{chart.y_min, chart.y_max};
  std::string out = Header(chart.title, chart.x_label, chart.y_label, f);
  const double slot = n == 0 ? 0.0 : f.plot_w() / n;
  for (size_t i = 0; i < n; ++i) {
    const double x = kLeft + slot * i + slot * 0.15;
    const double w = slot * 0.7;
    const double top = f.Y(chart.values[i]);
    out += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x,
        top, w, f.Y(f.y_min) - top, kPalette[0]);
    if (!chart.lower.empty()) {
      const double cx = x + w / 2;
      out += fmt::format(
          "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n",
          cx, f.Y(chart.lower[i]), f.Y(chart.upper[i]));
    }
    out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       x + w / 2, kTop + f.plot_h() + 18, Escape(chart.labels[i]));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace promptex::charts
