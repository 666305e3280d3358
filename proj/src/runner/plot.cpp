// Copyright 2026 The Fairlens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fairlens/runner/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "fairlens/common.hpp"

namespace fairlens::runner {

namespace {

constexpr std::array<const char*, 6> kPalette{"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"};

std::string escape(const std::string& text) {
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

}  // namespace

std::string format_value(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return "NA";
  return fmt::format("{:.6g}", *v);
}

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<BarSeries>& series) {
  const double label_w = 170, plot_w = 420, bar_h = 12, gap = 10, top = 40;
  const std::size_t ns = std::max<std::size_t>(series.size(), 1);
  double lo = 0.0, hi = 0.0;
  for (const auto& s : series) {
    for (const auto& v : s.values) {
      if (v && std::isfinite(*v)) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
    }
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double group_h = static_cast<double>(ns) * bar_h + gap;
  const double height = top + static_cast<double>(labels.size()) * group_h + 20 + 16 * static_cast<double>(ns);
  const double width = label_w + plot_w + 80;
  auto x_of = [&](double v) { return label_w + (v - lo) / (hi - lo) * plot_w; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height);
  svg += fmt::format("<text x=\"10\" y=\"20\" font-size=\"14\">{}</text>\n", escape(title));
  const double axis = x_of(0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y0 = top + static_cast<double>(i) * group_h;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", label_w - 6,
                       y0 + static_cast<double>(ns) * bar_h / 2 + 4, escape(labels[i]));
    for (std::size_t s = 0; s < series.size(); ++s) {
      const auto& v = i < series[s].values.size() ? series[s].values[i] : std::nullopt;
      const double y = y0 + static_cast<double>(s) * bar_h;
      if (!v || !std::isfinite(*v)) {
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" fill=\"#888\">n/a</text>\n", axis + 4, y + bar_h - 2);
        continue;
      }
      const double x = std::min(axis, x_of(*v));
      const double w = std::abs(x_of(*v) - axis);
      svg += fmt::format(
          "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>"
          "<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n",
          x, y, w, bar_h - 1, kPalette[s % kPalette.size()], std::max(axis, x_of(*v)) + 3, y + bar_h - 2,
          format_value(v));
    }
  }
  svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"#333\"/>\n",
                     axis, top - 4, top + static_cast<double>(labels.size()) * group_h);
  const double legend_y = top + static_cast<double>(labels.size()) * group_h + 12;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = legend_y + 16 * static_cast<double>(s);
    svg += fmt::format(
        "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"10\" height=\"10\" fill=\"{}\"/>"
        "<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n",
        label_w, y, kPalette[s % kPalette.size()], label_w + 14, y + 9, escape(series[s].name));
  }
  svg += "</svg>\n";
  return svg;
}

std::string grid_svg(const std::string& title, const std::vector<std::string>& rows,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<std::optional<double>>>& values) {
  const double label_w = 170, cell_w = 90, cell_h = 22, top = 60;
  const double width = label_w + cell_w * static_cast<double>(columns.size()) + 20;
  const double height = top + cell_h * static_cast<double>(rows.size()) + 20;
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height);
  svg += fmt::format("<text x=\"10\" y=\"20\" font-size=\"14\">{}</text>\n", escape(title));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                       label_w + cell_w * (static_cast<double>(c) + 0.5), top - 8, escape(columns[c]));
  }
  for (std::size_t c = 0; c < columns.size(); ++c) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& row : values) {
      if (c < row.size() && row[c] && std::isfinite(*row[c])) {
        lo = std::min(lo, *row[c]);
        hi = std::max(hi, *row[c]);
      }
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto v = c < values[r].size() ? values[r][c] : std::nullopt;
      const double x = label_w + cell_w * static_cast<double>(c);
      const double y = top + cell_h * static_cast<double>(r);
      std::string fill = "#eeeeee";
      if (v && std::isfinite(*v)) {
        const double t = hi > lo ? (*v - lo) / (hi - lo) : 0.0;
        const int shade = static_cast<int>(std::lround(235 - 150 * t));
        fill = fmt::format("rgb({},{},255)", shade, shade);
      }
      svg += fmt::format(
          "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\" stroke=\"#fff\"/>"
          "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
          x, y, cell_w, cell_h, fill, x + cell_w / 2, y + cell_h / 2 + 4, format_value(v));
    }
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", label_w - 6,
                       top + cell_h * (static_cast<double>(r) + 0.5) + 4, escape(rows[r]));
  }
  svg += "</svg>\n";
  return svg;
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "\t" : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

}  // namespace fairlens::runner
