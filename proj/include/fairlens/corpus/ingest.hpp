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

#ifndef FAIRLENS_CORPUS_INGEST_HPP_
#define FAIRLENS_CORPUS_INGEST_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairlens/corpus/example.hpp"
#include "fairlens/corpus/tokenizer.hpp"
#include "fairlens/corpus/vocabulary.hpp"

namespace fairlens::corpus {

enum class CorpusFormat {
  kGeneric,        // {id, text, toxicity | label}
  kCivilComments,  // {id?, text, toxicity}
  kJigsaw,         // {id, comment_text, target | toxicity}
};

CorpusFormat corpus_format_from_string(const std::string& name);

struct RawRecord {
  std::string id;
  std::string text;
  double toxicity = 0.0;  // fractional score; labels map to 0 or 1
  Json metadata;
};

// Maps one decoded line onto a RawRecord. Returns nullopt and fills `error`
// when required fields are missing or ill-typed. `line_no` supplies an id
// when the format has none.
std::optional<RawRecord> parse_raw_record(const Json& j, CorpusFormat format, std::size_t line_no,
                                          std::string* error);

struct IngestOptions {
  double toxicity_threshold = 0.5;  // toxic iff score >= threshold
};

struct IngestStats {
  std::size_t read = 0;
  std::size_t malformed = 0;
  std::size_t no_terms = 0;
  std::size_t multiple_groups = 0;
  std::size_t excluded = 0;
  std::size_t kept = 0;
};

struct IngestResult {
  std::vector<Example> examples;
  IngestStats stats;
};

// Whole-word, case-insensitive identity-term matcher. Multi-word terms match
// as token sequences; at each position the longest term wins and matches do
// not overlap.
class TermMatcher {
 public:
  TermMatcher(const GroupVocabulary& vocab);
  explicit TermMatcher(std::span<const std::string> plain_terms);

  std::vector<SensitiveSpan> find(const std::vector<Token>& tokens) const;

 private:
  struct Entry {
    std::vector<std::string> words;
    std::string term;
    std::string group;
  };
  std::vector<Entry> entries_;  // longest first
};

// Keeps records with at least one term of exactly one group and no exclusion
// terms; populates sensitive spans.
IngestResult ingest(std::span<const RawRecord> records, const GroupVocabulary& vocab,
                    std::span<const std::string> exclusion_terms, const IngestOptions& options = {});

// Reads a JSON-lines corpus. Malformed lines are skipped with a logged
// diagnostic and counted in stats.malformed.
IngestResult ingest_file(const std::filesystem::path& path, CorpusFormat format,
                         const GroupVocabulary& vocab, std::span<const std::string> exclusion_terms,
                         const IngestOptions& options = {});

// Canonical examples back to raw records (label -> 1.0 / 0.0).
std::vector<RawRecord> to_raw_records(std::span<const Example> examples);

}  // namespace fairlens::corpus

#endif  // FAIRLENS_CORPUS_INGEST_HPP_
