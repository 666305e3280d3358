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

#include "fairlens/corpus/sampling.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "fairlens/corpus/counterfactual.hpp"

namespace fairlens::corpus {
namespace {

std::vector<std::string> groups_in_order(const std::vector<Example>& examples) {
  std::vector<std::string> out;
  for (const auto& e : examples) {
    if (std::find(out.begin(), out.end(), e.group) == out.end()) out.push_back(e.group);
  }
  return out;
}

// Indices of `examples` per key, in input order.
template <typename Key, typename KeyFn>
std::map<Key, std::vector<std::size_t>> bucket(const std::vector<Example>& examples, KeyFn key) {
  std::map<Key, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < examples.size(); ++i) out[key(examples[i])].push_back(i);
  return out;
}

std::vector<Example> take(const std::vector<Example>& examples, std::vector<std::size_t> idx,
                          std::size_t n, std::uint64_t seed) {
  seeded_shuffle(idx, seed);
  idx.resize(n);
  std::vector<Example> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(examples[i]);
  return out;
}

}  // namespace

std::vector<Example> balanced_sample(const std::vector<Example>& examples, std::size_t per_group_n,
                                     std::uint64_t seed, std::span<const std::string> groups) {
  std::vector<std::string> order(groups.begin(), groups.end());
  if (order.empty()) order = groups_in_order(examples);
  auto buckets = bucket<std::string>(examples, [](const Example& e) { return e.group; });

  std::string deficit;
  for (const auto& g : order) {
    const std::size_t have = buckets.contains(g) ? buckets[g].size() : 0;
    if (have < per_group_n) {
      if (!deficit.empty()) deficit += ", ";
      deficit += g + " short by " + std::to_string(per_group_n - have);
    }
  }
  if (!deficit.empty()) throw DataError("balanced_sample: insufficient examples (" + deficit + ")");

  std::vector<Example> out;
  for (const auto& g : order) {
    auto part = take(examples, buckets[g], per_group_n, derive_seed(seed, "balanced", g));
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

DebiasTransform debias_transform_from_string(const std::string& name) {
  if (name == "group_balance") return DebiasTransform::kGroupBalance;
  if (name == "group_class_balance") return DebiasTransform::kGroupClassBalance;
  if (name == "cda") return DebiasTransform::kCda;
  throw ConfigError("unknown debias transform \"" + name + "\"");
}

std::vector<Example> debias_transform(const std::vector<Example>& examples, DebiasTransform kind,
                                      const GroupVocabulary& vocab, std::uint64_t seed,
                                      const DebiasTransformOptions& options) {
  std::vector<Example> out;
  switch (kind) {
    case DebiasTransform::kGroupBalance: {
      auto buckets = bucket<std::string>(examples, [](const Example& e) { return e.group; });
      std::size_t n = std::numeric_limits<std::size_t>::max();
      for (const auto& g : vocab.groups()) n = std::min(n, buckets.contains(g) ? buckets[g].size() : 0);
      for (const auto& g : vocab.groups()) {
        if (!buckets.contains(g)) continue;
        auto part = take(examples, buckets[g], n, derive_seed(seed, "group_balance", g));
        out.insert(out.end(), part.begin(), part.end());
      }
      break;
    }
    case DebiasTransform::kGroupClassBalance: {
      using Cell = std::pair<std::string, int>;
      auto buckets = bucket<Cell>(
          examples, [](const Example& e) { return Cell{e.group, class_index(e.label)}; });
      std::size_t n = std::numeric_limits<std::size_t>::max();
      for (const auto& g : vocab.groups()) {
        for (int c = 0; c < kNumClasses; ++c) {
          auto it = buckets.find({g, c});
          if (it == buckets.end() || it->second.empty()) {
            throw DataError("group_class_balance: empty cell (" + g + ", " +
                            std::string(to_string(static_cast<Label>(c))) + ")");
          }
          n = std::min(n, it->second.size());
        }
      }
      for (const auto& g : vocab.groups()) {
        for (int c = 0; c < kNumClasses; ++c) {
          auto part = take(examples, buckets[{g, c}], n,
                           derive_seed(seed, "group_class_balance", g + "/" + std::to_string(c)));
          out.insert(out.end(), part.begin(), part.end());
        }
      }
      break;
    }
    case DebiasTransform::kCda: {
      out = examples;
      for (const auto& e : examples) {
        for (auto& [g, v] : counterfactuals(e, vocab).variants) out.push_back(std::move(v));
      }
      if (options.match_input_size && out.size() > examples.size()) {
        std::vector<std::size_t> idx(out.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        out = take(out, std::move(idx), examples.size(), derive_seed(seed, "cda"));
      }
      return out;
    }
  }
  if (options.match_input_size && out.size() > examples.size()) out.resize(examples.size());
  return out;
}

}  // namespace fairlens::corpus
