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

#ifndef FAIRLENS_AUDIT_STATISTICS_HPP_
#define FAIRLENS_AUDIT_STATISTICS_HPP_

#include <optional>
#include <span>
#include <vector>

namespace fairlens::audit {

struct Correlation {
  double r = 0.0;
  double p = 1.0;  // two-sided, t-test with n - 2 degrees of freedom
  std::size_t n = 0;
};

// Pearson correlation; nullopt when n < 2 or either side has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Pearson r with its two-sided significance. nullopt as for pearson(), and
// also when n < 3 (no degrees of freedom for the test).
std::optional<Correlation> pearson_test(std::span<const double> x, std::span<const double> y);

// Two-sided p-value of a Pearson r on n samples.
double pearson_p_value(double r, std::size_t n);

// 1-based ranks; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> x);

// Pearson correlation of tie-averaged ranks.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);

}  // namespace fairlens::audit

#endif  // FAIRLENS_AUDIT_STATISTICS_HPP_
