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

#ifndef FAIRLENS_CORPUS_PLANTED_HPP_
#define FAIRLENS_CORPUS_PLANTED_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fairlens/corpus/example.hpp"
#include "fairlens/corpus/vocabulary.hpp"

namespace fairlens::corpus {

// Synthetic benchmark with a planted group-label correlation.
//
// Two groups, each realized by one interchangeable identity token. Sentences
// are shuffled bags of label cue words, neutral fillers and the group token.
// The label agrees with the group's planted label with probability
// `plant_rate`; each cue word agrees with the label with probability
// `cue_reliability`. At plant_rate 0.5 the group carries no label signal.
struct PlantedConfig {
  double plant_rate = 0.8;
  double cue_reliability = 0.8;
  int min_cues = 1;
  int max_cues = 3;
  int min_fillers = 2;
  int max_fillers = 5;
};

inline constexpr const char* kPlantedBiasType = "planted";
inline constexpr const char* kPlantedToxicGroup = "group_a";
inline constexpr const char* kPlantedBenignGroup = "group_b";

GroupVocabulary planted_vocabulary();

// `n` examples with groups alternating so every group gets n/2 (rounded
// down for the second group). Ids are `<id_prefix><index>`.
std::vector<Example> generate_planted(std::size_t n, const PlantedConfig& config, std::uint64_t seed,
                                      const std::string& id_prefix = "p");

}  // namespace fairlens::corpus

#endif  // FAIRLENS_CORPUS_PLANTED_HPP_
