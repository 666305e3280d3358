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

#include "fairlens/corpus/counterfactual.hpp"

#include <algorithm>
#include <cctype>

#include "fairlens/corpus/ingest.hpp"
#include "fairlens/corpus/tokenizer.hpp"

namespace fairlens::corpus {

Example rewrite_to_group(const Example& e, const GroupVocabulary& vocab,
                         const std::string& target_group) {
  if (e.sensitive_spans.empty()) throw ConfigError("example " + e.id + " has no sensitive spans");
  const auto tokens = tokenize(e.text);
  if (tokens.size() != e.tokens.size()) {
    throw DataError("example " + e.id + ": tokens do not match its text");
  }
  auto spans = e.sensitive_spans;
  std::sort(spans.begin(), spans.end(),
            [](const SensitiveSpan& a, const SensitiveSpan& b) { return a.start < b.start; });

  std::string text;
  std::size_t cursor = 0;
  for (const auto& s : spans) {
    if (s.start < 0 || s.end > static_cast<int>(tokens.size()) || s.start >= s.end) {
      throw DataError("example " + e.id + ": span out of token bounds");
    }
    const std::size_t begin = tokens[s.start].begin;
    const std::size_t end = tokens[s.end - 1].end;
    std::string replacement = vocab.substitute(s.term, target_group);
    if (!replacement.empty() && std::isupper(static_cast<unsigned char>(e.text[begin]))) {
      replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
    }
    text.append(e.text, cursor, begin - cursor);
    text += replacement;
    cursor = end;
  }
  text.append(e.text, cursor, std::string::npos);

  Example out;
  out.id = e.id + "@" + target_group;
  out.text = std::move(text);
  auto new_tokens = tokenize(out.text);
  out.sensitive_spans = TermMatcher(vocab).find(new_tokens);
  std::erase_if(out.sensitive_spans,
                [&](const SensitiveSpan& s) { return s.group != target_group; });
  for (auto& t : new_tokens) out.tokens.push_back(std::move(t.text));
  out.label = e.label;
  out.bias_type = e.bias_type;
  out.group = target_group;
  return out;
}

CounterfactualSet counterfactuals(const Example& e, const GroupVocabulary& vocab) {
  CounterfactualSet cs;
  cs.original = e;
  for (const auto& g : vocab.groups()) {
    if (g == e.group) continue;
    cs.variants.emplace(g, rewrite_to_group(e, vocab, g));
  }
  return cs;
}

}  // namespace fairlens::corpus
