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
#include <cmath>
#include <numeric>

#include "fairlens/audit/audit.hpp"

namespace fairlens::audit {

std::size_t tokens_for_ratio(std::size_t n, double ratio) {
  if (ratio <= 0.0 || ratio > 1.0) throw ConfigError("masking ratio must be in (0, 1]");
  const auto m = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(n, 1));
}

std::vector<std::size_t> top_tokens(std::span<const double> scores, std::size_t m) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(m, order.size()));
  return order;
}

FaithfulnessResult faithfulness(const model::Classifier& model,
                                const std::vector<corpus::Example>& examples,
                                const std::vector<std::vector<double>>& scores,
                                const std::vector<double>& ratios, Execution exec) {
  if (scores.size() != examples.size()) {
    throw ConfigError("faithfulness: one score vector per example required");
  }
  if (ratios.empty()) throw ConfigError("faithfulness: no masking ratios");
  const std::size_t n = examples.size();
  const std::size_t r = ratios.size();
  std::vector<double> comp(n * r), suff(n * r);
  const std::string replacement = model.replacement_token();
  for_each_index(n, exec, [&](std::size_t i) {
    const auto input = model::model_input(model, examples[i]);
    const std::vector<std::string> tokens(input.begin(), input.end());
    if (scores[i].size() < tokens.size()) {
      throw DataError("attribution for " + examples[i].id + " does not cover its tokens");
    }
    const auto p = model.predict_proba(tokens);
    const Label c = p.argmax();
    const std::span<const double> s(scores[i].data(), tokens.size());
    for (std::size_t k = 0; k < r; ++k) {
      const auto top = top_tokens(s, tokens_for_ratio(tokens.size(), ratios[k]));
      std::vector<bool> chosen(tokens.size(), false);
      for (auto t : top) chosen[t] = true;
      auto removed = tokens;
      auto kept = tokens;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (chosen[t]) {
          removed[t] = replacement;
        } else {
          kept[t] = replacement;
        }
      }
      comp[i * r + k] = p[c] - model.predict_proba(removed)[c];
      suff[i * r + k] = p[c] - model.predict_proba(kept)[c];
    }
  });

  FaithfulnessResult out;
  out.ratios = ratios;
  out.examples = n;
  out.comprehensiveness.assign(r, 0.0);
  out.sufficiency.assign(r, 0.0);
  if (n == 0) return out;
  for (std::size_t k = 0; k < r; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      out.comprehensiveness[k] += comp[i * r + k];
      out.sufficiency[k] += suff[i * r + k];
    }
    out.comprehensiveness[k] *= 100.0 / static_cast<double>(n);
    out.sufficiency[k] *= 100.0 / static_cast<double>(n);
  }
  out.comp_aopc = std::accumulate(out.comprehensiveness.begin(), out.comprehensiveness.end(), 0.0) /
                  static_cast<double>(r);
  out.suff_aopc = std::accumulate(out.sufficiency.begin(), out.sufficiency.end(), 0.0) /
                  static_cast<double>(r);
  return out;
}

}  // namespace fairlens::audit
