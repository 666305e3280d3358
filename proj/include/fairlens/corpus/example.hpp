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

#ifndef FAIRLENS_CORPUS_EXAMPLE_HPP_
#define FAIRLENS_CORPUS_EXAMPLE_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fairlens/common.hpp"
#include "fairlens/jsonl.hpp"

namespace fairlens::corpus {

// Token span [start, end) realizing an identity term of `group`.
struct SensitiveSpan {
  int start = 0;
  int end = 0;
  std::string term;
  std::string group;

  bool operator==(const SensitiveSpan&) const = default;
};

struct Example {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  Label label = Label::kNonToxic;
  std::string bias_type;
  std::string group;
  std::vector<SensitiveSpan> sensitive_spans;

  bool operator==(const Example&) const = default;

  // Sorted, de-duplicated token indices covered by sensitive spans.
  std::vector<int> sensitive_token_indices() const;
};

// Canonical store record. Field order: id, text, tokens, label, bias_type,
// group, spans.
Json to_json(const Example& e);
Example example_from_json(const Json& j);

void save_examples(const std::filesystem::path& path, const std::vector<Example>& examples);
std::vector<Example> load_examples(const std::filesystem::path& path);

// Group histogram, keyed by group name.
std::map<std::string, std::size_t> group_counts(const std::vector<Example>& examples);

}  // namespace fairlens::corpus

#endif  // FAIRLENS_CORPUS_EXAMPLE_HPP_
