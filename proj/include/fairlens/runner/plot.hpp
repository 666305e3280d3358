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

#ifndef FAIRLENS_RUNNER_PLOT_HPP_
#define FAIRLENS_RUNNER_PLOT_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fairlens::runner {

struct BarSeries {
  std::string name;
  std::vector<std::optional<double>> values;  // aligned with the chart labels
};

// Grouped horizontal bar chart. Negative values extend left of the axis.
std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<BarSeries>& series);

// Heat grid; cells shaded by value between the column minimum and maximum.
std::string grid_svg(const std::string& title, const std::vector<std::string>& rows,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<std::optional<double>>>& values);

// Tab-separated table with a header row; undefined cells print as NA.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

std::string format_value(const std::optional<double>& v);

}  // namespace fairlens::runner

#endif  // FAIRLENS_RUNNER_PLOT_HPP_
