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

#include "fairlens/corpus/planted.hpp"

#include <array>
#include <random>

#include "fairlens/corpus/ingest.hpp"
#include "fairlens/corpus/sampling.hpp"
#include "fairlens/digest.hpp"

namespace fairlens::corpus {
namespace {

constexpr std::array kToxicCues = {"idiots", "stupid", "trash",  "pathetic",
                                   "disgusting", "morons", "worthless", "awful"};
constexpr std::array kBenignCues = {"kind",    "lovely", "great", "friendly",
                                    "helpful", "smart",  "wonderful", "decent"};
constexpr std::array kFillers = {"the",   "people", "are",   "my",   "neighbors", "from",
                                 "town",  "really", "always", "today", "said",     "they",
                                 "those", "at",     "work",  "in",   "our",       "city"};
constexpr const char* kToxicGroupTerm = "amaji";
constexpr const char* kBenignGroupTerm = "borani";

template <std::size_t N>
const char* pick(const std::array<const char*, N>& words, std::mt19937_64& rng) {
  return words[uniform_index(rng, N)];
}

int uniform_between(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

}  // namespace

GroupVocabulary planted_vocabulary() {
  GroupVocabulary v(kPlantedBiasType);
  v.add_term(kPlantedToxicGroup, kToxicGroupTerm, {{kPlantedBenignGroup, kBenignGroupTerm}});
  v.add_term(kPlantedBenignGroup, kBenignGroupTerm, {{kPlantedToxicGroup, kToxicGroupTerm}});
  return v;
}

std::vector<Example> generate_planted(std::size_t n, const PlantedConfig& config, std::uint64_t seed,
                                      const std::string& id_prefix) {
  if (config.min_cues < 0 || config.max_cues < config.min_cues || config.min_fillers < 0 ||
      config.max_fillers < config.min_fillers) {
    throw ConfigError("planted benchmark: invalid cue/filler ranges");
  }
  std::mt19937_64 rng(seed);
  std::vector<RawRecord> raw;
  raw.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool group_a = i % 2 == 0;
    const Label planted = group_a ? Label::kToxic : Label::kNonToxic;
    const Label label = uniform_unit(rng) < config.plant_rate ? planted : other(planted);

    std::vector<std::string> words;
    words.emplace_back(group_a ? kToxicGroupTerm : kBenignGroupTerm);
    const int cues = uniform_between(rng, config.min_cues, config.max_cues);
    for (int c = 0; c < cues; ++c) {
      const bool agrees = uniform_unit(rng) < config.cue_reliability;
      const bool toxic_cue = (label == Label::kToxic) == agrees;
      words.emplace_back(toxic_cue ? pick(kToxicCues, rng) : pick(kBenignCues, rng));
    }
    const int fillers = uniform_between(rng, config.min_fillers, config.max_fillers);
    for (int f = 0; f < fillers; ++f) words.emplace_back(pick(kFillers, rng));
    seeded_shuffle(words, rng());

    std::string text;
    for (const auto& w : words) {
      if (!text.empty()) text.push_back(' ');
      text += w;
    }
    raw.push_back({id_prefix + std::to_string(i), std::move(text),
                   label == Label::kToxic ? 1.0 : 0.0, Json::object()});
  }
  return ingest(raw, planted_vocabulary(), {}).examples;
}

}  // namespace fairlens::corpus
