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

#include <cmath>
#include <tuple>

#include <spdlog/spdlog.h>

#include "fairlens/audit/audit.hpp"

namespace fairlens::audit {

FairnessCorrelation fairness_correlation(const std::vector<attribution::RelianceRecord>& reliances,
                                         const std::map<std::string, double>& iu, double alpha) {
  std::map<std::pair<Label, std::string>, std::pair<std::vector<double>, std::vector<double>>> cells;
  FairnessCorrelation out;
  for (const auto& r : reliances) {
    auto it = iu.find(r.example_id);
    if (it == iu.end()) {
      ++out.missing_iu;
      continue;
    }
    auto& [x, y] = cells[{r.prediction, r.group}];
    x.push_back(r.reliance);
    y.push_back(it->second);
  }
  double total = 0.0;
  for (const auto& [key, xy] : cells) {
    CellCorrelation c;
    c.prediction = key.first;
    c.group = key.second;
    c.n = xy.first.size();
    c.correlation = pearson_test(xy.first, xy.second);
    if (c.correlation) {
      ++out.evaluated;
      total += std::abs(c.correlation->r);
      if (c.correlation->p < alpha) ++out.significant;
    } else {
      ++out.skipped;
    }
    out.cells.push_back(std::move(c));
  }
  if (out.evaluated > 0) out.mean_abs_r = total / static_cast<double>(out.evaluated);
  return out;
}

std::vector<AuditRecord> rq1_records(const FairnessCorrelation& fc, const std::string& method,
                                     const std::string& model_digest, const std::string& bias_type,
                                     std::uint64_t seed, const std::string& timestamp) {
  std::vector<AuditRecord> out;
  AuditRecord summary;
  summary.kind = AuditKind::kRq1;
  summary.method = method;
  summary.model_digest = model_digest;
  summary.bias_type = bias_type;
  summary.seed = seed;
  summary.timestamp = timestamp;
  summary.set("mean_abs_r", fc.mean_abs_r)
      .set("cells", static_cast<double>(fc.cells.size()))
      .set("evaluated", static_cast<double>(fc.evaluated))
      .set("skipped", static_cast<double>(fc.skipped))
      .set("significant", static_cast<double>(fc.significant))
      .set("missing_iu", static_cast<double>(fc.missing_iu));
  out.push_back(summary);
  for (const auto& c : fc.cells) {
    AuditRecord r;
    r.kind = AuditKind::kRq1;
    r.method = method;
    r.model_digest = model_digest;
    r.bias_type = bias_type;
    r.seed = seed;
    r.timestamp = timestamp;
    r.cell_class = c.prediction;
    r.cell_group = c.group;
    r.set("n", static_cast<double>(c.n));
    if (c.correlation) {
      r.set("r", c.correlation->r).set("p", c.correlation->p);
    } else {
      r.set("r", std::nullopt).set("p", std::nullopt);
    }
    out.push_back(r);
  }
  return out;
}

double average_abs_reliance(const std::vector<attribution::RelianceRecord>& reliances) {
  if (reliances.empty()) throw DataError("no reliance records");
  double total = 0.0;
  for (const auto& r : reliances) total += std::abs(r.reliance);
  return total / static_cast<double>(reliances.size());
}

double mrr_at_1(std::span<const double> predictor, std::span<const double> truth) {
  if (predictor.size() != truth.size() || truth.empty()) {
    throw ConfigError("mrr_at_1: predictor and truth must be non-empty and aligned");
  }
  std::size_t fairest = 0;
  for (std::size_t k = 1; k < truth.size(); ++k) {
    if (truth[k] < truth[fairest]) fairest = k;
  }
  std::size_t rank = 1;
  for (std::size_t k = 0; k < predictor.size(); ++k) {
    if (predictor[k] < predictor[fairest] || (predictor[k] == predictor[fairest] && k < fairest)) {
      ++rank;
    }
  }
  return 1.0 / static_cast<double>(rank);
}

RankingScore score_ranking(std::span<const double> predictor, std::span<const double> truth) {
  return {spearman(predictor, truth), mrr_at_1(predictor, truth)};
}

SelectionResult select_models(const SelectionInput& input) {
  const std::size_t k = input.test_avg_iu.size();
  if (k < 3) throw ConfigError("model selection needs at least 3 candidates");
  if (input.explanation.empty() || input.explanation.size() != input.baseline.size()) {
    throw ConfigError("model selection needs matching explanation and baseline resamples");
  }
  SelectionResult out;
  out.resamples = input.explanation.size();
  double rho = 0.0, base_rho = 0.0;
  std::size_t rho_n = 0, base_rho_n = 0;
  for (std::size_t s = 0; s < out.resamples; ++s) {
    if (input.explanation[s].size() != k || input.baseline[s].size() != k) {
      throw ConfigError("resample " + std::to_string(s) + " does not cover every candidate");
    }
    auto e = score_ranking(input.explanation[s], input.test_avg_iu);
    auto b = score_ranking(input.baseline[s], input.test_avg_iu);
    out.mrr += e.mrr;
    out.baseline_mrr += b.mrr;
    if (e.rho) {
      rho += *e.rho;
      ++rho_n;
    }
    if (b.rho) {
      base_rho += *b.rho;
      ++base_rho_n;
    }
  }
  const auto n = static_cast<double>(out.resamples);
  out.mrr /= n;
  out.baseline_mrr /= n;
  if (rho_n) out.rho = rho / static_cast<double>(rho_n);
  if (base_rho_n) out.baseline_rho = base_rho / static_cast<double>(base_rho_n);
  return out;
}

std::vector<FairwashDelta> fairwash_delta(const std::map<std::string, double>& default_r,
                                          const std::map<std::string, double>& debiased_r) {
  std::vector<FairwashDelta> out;
  for (const auto& [method, d] : default_r) {
    auto it = debiased_r.find(method);
    if (it == debiased_r.end()) {
      spdlog::warn("fairwash: method {} missing from the debiased run; skipped", method);
      continue;
    }
    out.push_back({method, d, it->second, it->second - d});
  }
  for (const auto& [method, _] : debiased_r) {
    if (!default_r.contains(method)) {
      spdlog::warn("fairwash: method {} missing from the default run; skipped", method);
    }
  }
  return out;
}

std::vector<FairwashDelta> fairwash_delta(const std::vector<AuditRecord>& default_rq1,
                                          const std::vector<AuditRecord>& debiased_rq1) {
  auto summaries = [](const std::vector<AuditRecord>& records, std::string& bias) {
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& r : records) {
      if (r.kind != AuditKind::kRq1 || r.cell_class || r.cell_group) continue;
      if (!bias.empty() && r.bias_type != bias) {
        throw DataError("fairwash: runs mix bias types " + bias + " and " + r.bias_type);
      }
      bias = r.bias_type;
      if (auto v = r.stat("mean_abs_r")) {
        acc[r.method].first += *v;
        ++acc[r.method].second;
      }
    }
    // Several seeds of one method are averaged.
    std::map<std::string, double> out;
    for (const auto& [m, sc] : acc) out[m] = sc.first / sc.second;
    return out;
  };
  std::string bias;
  auto d = summaries(default_rq1, bias);
  auto b = summaries(debiased_rq1, bias);
  return fairwash_delta(d, b);
}

}  // namespace fairlens::audit
