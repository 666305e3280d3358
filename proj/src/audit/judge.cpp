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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "fairlens/audit/audit.hpp"
#include "fairlens/corpus/counterfactual.hpp"
#include "fairlens/fairness/metrics.hpp"

namespace fairlens::audit {

JudgeReport judge_report(const std::string& judge, const std::vector<bool>& biased,
                         const std::vector<double>& iu) {
  if (biased.size() != iu.size()) throw ConfigError("judge report: flags and IU misaligned");
  JudgeReport r;
  r.judge = judge;
  double sum_b = 0.0, sum_u = 0.0;
  std::vector<double> flag(biased.size());
  for (std::size_t i = 0; i < biased.size(); ++i) {
    flag[i] = biased[i] ? 1.0 : 0.0;
    if (biased[i]) {
      ++r.biased.count;
      sum_b += iu[i];
    } else {
      ++r.unbiased.count;
      sum_u += iu[i];
    }
  }
  if (r.biased.count) r.biased.avg_iu = 100.0 * sum_b / static_cast<double>(r.biased.count);
  if (r.unbiased.count) r.unbiased.avg_iu = 100.0 * sum_u / static_cast<double>(r.unbiased.count);
  if (auto c = pearson_test(flag, iu)) {
    r.correlation = c->r;
    r.p_value = c->p;
  }
  return r;
}

Json JudgeReport::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json j;
  j["judge"] = judge;
  j["biased"] = {{"count", biased.count}, {"avg_iu", opt(biased.avg_iu)}};
  j["unbiased"] = {{"count", unbiased.count}, {"avg_iu", opt(unbiased.avg_iu)}};
  j["correlation"] = opt(correlation);
  j["p"] = opt(p_value);
  j["unparseable"] = unparseable;
  j["excluded"] = excluded;
  return j;
}

AuditRecord JudgeReport::to_record(const std::string& model_digest, const std::string& bias_type,
                                   std::uint64_t seed, const std::string& timestamp) const {
  AuditRecord r;
  r.kind = AuditKind::kLlmJudge;
  r.method = judge;
  r.model_digest = model_digest;
  r.bias_type = bias_type;
  r.seed = seed;
  r.timestamp = timestamp;
  r.set("biased_count", static_cast<double>(biased.count))
      .set("unbiased_count", static_cast<double>(unbiased.count))
      .set("biased_avg_iu", biased.avg_iu)
      .set("unbiased_avg_iu", unbiased.avg_iu)
      .set("correlation", correlation)
      .set("p", p_value)
      .set("unparseable", static_cast<double>(unparseable))
      .set("excluded", static_cast<double>(excluded));
  return r;
}

std::vector<bool> reliance_binary_baseline(const std::vector<attribution::RelianceRecord>& reliances,
                                           double fraction) {
  if (reliances.empty()) throw ConfigError("reliance baseline needs records");
  if (fraction < 0.0 || fraction > 1.0) throw ConfigError("fraction must be in [0, 1]");
  std::vector<std::size_t> order(reliances.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double x = std::abs(reliances[a].reliance);
    const double y = std::abs(reliances[b].reliance);
    if (x != y) return x > y;
    return reliances[a].example_id < reliances[b].example_id;
  });
  const auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(reliances.size()) + 1e-9));
  std::vector<bool> flags(reliances.size(), false);
  for (std::size_t k = 0; k < count; ++k) flags[order[k]] = true;
  return flags;
}

bool names_sensitive_term(const std::vector<std::string>& words,
                          const corpus::GroupVocabulary& vocab) {
  std::set<std::string> parts;
  for (const auto& term : vocab.all_terms()) {
    parts.insert(term);
    std::istringstream in(term);
    std::string w;
    while (in >> w) parts.insert(w);
  }
  for (auto w : words) {
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front()))) w.erase(w.begin());
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.pop_back();
    if (parts.contains(w)) return true;
  }
  return false;
}

JudgeReport llm_judge(const model::PromptedDecoder& decoder,
                      const std::vector<corpus::Example>& examples, JudgeMode mode,
                      const corpus::GroupVocabulary& vocab, int num_tokens, Execution exec) {
  model::PromptTemplate follow;
  follow.mode = mode == JudgeMode::kSelfReflection ? model::PromptMode::kSelfReflection
                                                   : model::PromptMode::kSelfAttribution;
  follow.bias_type = vocab.bias_type();
  follow.num_tokens = num_tokens;

  const std::size_t n = examples.size();
  std::vector<std::optional<bool>> flag(n);
  std::vector<std::optional<double>> iu(n);
  std::vector<char> unparseable(n, 0);
  for_each_index(n, exec, [&](std::size_t i) {
    const auto& e = examples[i];
    const auto text = decoder.follow_up(e, follow);
    try {
      if (mode == JudgeMode::kSelfReflection) {
        flag[i] = model::parse_yes_no(text) == model::Answer::kYes;
      } else {
        flag[i] = names_sensitive_term(model::parse_word_list(text), vocab);
      }
    } catch (const UnparseableError&) {
      unparseable[i] = 1;
      return;
    }
    try {
      iu[i] = fairness::individual_unfairness(decoder, corpus::counterfactuals(e, vocab));
    } catch (const Error& err) {
      spdlog::warn("llm judge: no IU for {}: {}", e.id, err.what());
    }
  });

  std::vector<bool> flags;
  std::vector<double> ius;
  std::size_t bad = 0, excluded = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (unparseable[i]) {
      ++bad;
    } else if (!iu[i]) {
      ++excluded;
    } else {
      flags.push_back(*flag[i]);
      ius.push_back(*iu[i]);
    }
  }
  auto report = judge_report(
      mode == JudgeMode::kSelfReflection ? "self_reflection"
                                         : "self_attribution_k" + std::to_string(num_tokens),
      flags, ius);
  report.unparseable = bad;
  report.excluded = excluded;
  if (bad) spdlog::warn("llm judge: {} unparseable continuations excluded", bad);
  return report;
}

}  // namespace fairlens::audit
