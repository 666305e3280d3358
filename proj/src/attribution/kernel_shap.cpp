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

#include "fairlens/attribution/kernel_shap.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "fairlens/common.hpp"
#include "fairlens/digest.hpp"

namespace fairlens::attribution {

namespace {

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

std::vector<double> kernel_shap(std::size_t players,
                                const std::function<double(const std::vector<bool>&)>& value,
                                int samples, std::uint64_t seed) {
  const int m = static_cast<int>(players);
  if (m == 0) return {};
  if (samples < 1) throw ConfigError("kernelshap samples must be positive");
  const double v_none = value(std::vector<bool>(players, false));
  const double v_all = value(std::vector<bool>(players, true));
  const double delta = v_all - v_none;
  if (m == 1) return {delta};

  std::vector<std::vector<bool>> coalitions;
  std::vector<double> weights;
  const bool exhaustive = m < 31 && ((1LL << m) - 2) <= samples;
  if (exhaustive) {
    for (long long mask = 1; mask < (1LL << m) - 1; ++mask) {
      std::vector<bool> z(players);
      int size = 0;
      for (int j = 0; j < m; ++j) {
        z[static_cast<std::size_t>(j)] = ((mask >> j) & 1) != 0;
        size += z[static_cast<std::size_t>(j)] ? 1 : 0;
      }
      coalitions.push_back(std::move(z));
      weights.push_back((m - 1.0) /
                        (std::exp(log_choose(m, size)) * size * static_cast<double>(m - size)));
    }
  } else {
    // Size s has total kernel mass proportional to (M-1) / (s (M-s)); within a
    // size every coalition is equally likely. Sampled draws carry unit weight.
    std::vector<double> cumulative;
    double total = 0.0;
    for (int s = 1; s < m; ++s) {
      total += (m - 1.0) / (static_cast<double>(s) * (m - s));
      cumulative.push_back(total);
    }
    std::mt19937_64 rng(seed);
    std::vector<int> order(players);
    for (int k = 0; k < samples; ++k) {
      const double u = uniform_unit(rng) * total;
      int size = 1;
      while (size < m - 1 && cumulative[static_cast<std::size_t>(size - 1)] <= u) ++size;
      for (int j = 0; j < m; ++j) order[static_cast<std::size_t>(j)] = j;
      for (int j = 0; j < size; ++j) {
        const auto pick = j + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(m - j)));
        std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(pick)]);
      }
      std::vector<bool> z(players, false);
      for (int j = 0; j < size; ++j) z[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = true;
      coalitions.push_back(std::move(z));
      weights.push_back(1.0);
    }
  }

  // Eliminate the last player with the efficiency constraint and solve the
  // weighted least-squares problem for the rest.
  const int free = m - 1;
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(free, free);
  Eigen::VectorXd aty = Eigen::VectorXd::Zero(free);
  Eigen::VectorXd row(free);
  for (std::size_t k = 0; k < coalitions.size(); ++k) {
    const auto& z = coalitions[k];
    const double last = z[static_cast<std::size_t>(free)] ? 1.0 : 0.0;
    for (int j = 0; j < free; ++j) row(j) = (z[static_cast<std::size_t>(j)] ? 1.0 : 0.0) - last;
    const double y = value(z) - v_none - last * delta;
    ata.noalias() += weights[k] * row * row.transpose();
    aty += weights[k] * y * row;
  }
  // A tiny ridge keeps the system solvable when the sample misses a player.
  ata.diagonal().array() += 1e-10;
  const Eigen::VectorXd phi = ata.ldlt().solve(aty);
  std::vector<double> out(players);
  double assigned = 0.0;
  for (int j = 0; j < free; ++j) {
    out[static_cast<std::size_t>(j)] = phi(j);
    assigned += phi(j);
  }
  out[static_cast<std::size_t>(free)] = delta - assigned;
  return out;
}

}  // namespace fairlens::attribution
