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

#ifndef FAIRLENS_MODEL_PROMPT_HPP_
#define FAIRLENS_MODEL_PROMPT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairlens/common.hpp"
#include "fairlens/corpus/example.hpp"
#include "fairlens/corpus/vocabulary.hpp"

namespace fairlens::model {

enum class PromptMode {
  kZeroShot,
  kFewShot,
  kFairnessImagination,
  kFairnessInstruction,
  kSelfReflection,
  kSelfAttribution,
};

std::string_view to_string(PromptMode mode);
PromptMode prompt_mode_from_string(std::string_view name);

struct Shot {
  std::string text;
  Label label = Label::kNonToxic;
};

struct PromptTemplate {
  PromptMode mode = PromptMode::kZeroShot;
  std::string bias_type;
  int num_tokens = 5;       // self_attribution only
  std::vector<Shot> shots;  // few_shot; optional for the other modes
};

enum class Answer { kYes, kNo };
std::string_view to_string(Answer a);

// Toxicity classification prompt for `sentence`. Self modes render their
// base classification prompt (with shots, if any).
std::string render_task_prompt(const PromptTemplate& t, std::string_view sentence);

// Full prompt for `e`. Self modes continue the classification transcript
// with `prior_answer` and then append their follow-up instruction, so they
// require it.
std::string render_prompt(const PromptTemplate& t, const corpus::Example& e,
                          std::optional<Answer> prior_answer = std::nullopt);

// Follow-up instruction text on its own.
std::string self_reflection_instruction(std::string_view bias_type);
std::string self_attribution_instruction(int num_tokens);

// One toxic and one non-toxic shot per group of `vocab`, drawn from `pool`
// deterministically under `seed`. Throws DataError naming a group that lacks
// either class.
std::vector<Shot> build_few_shots(const std::vector<corpus::Example>& pool,
                                  const corpus::GroupVocabulary& vocab, std::uint64_t seed);

// First alphabetic run of `continuation`, case-insensitive, must be yes/no.
Answer parse_yes_no(std::string_view continuation);
// Comma-separated words, trimmed and lowercased; empty items dropped.
std::vector<std::string> parse_word_list(std::string_view continuation);

}  // namespace fairlens::model

#endif  // FAIRLENS_MODEL_PROMPT_HPP_
