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

#ifndef FAIRLENS_CORPUS_VOCABULARY_HPP_
#define FAIRLENS_CORPUS_VOCABULARY_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairlens/jsonl.hpp"

namespace fairlens::corpus {

// Identity-term vocabulary for one bias type.
//
// Every term belongs to exactly one group. `substitutions[term][g']` is the
// replacement used when rewriting `term` into group g'. Terms are stored
// lowercased; multi-word terms are allowed and match as token sequences.
class GroupVocabulary {
 public:
  GroupVocabulary() = default;
  explicit GroupVocabulary(std::string bias_type) : bias_type_(std::move(bias_type)) {}

  // Adds a term with its cross-group replacements. Throws DataError if the
  // term is already registered under a different group.
  void add_term(const std::string& group, const std::string& term,
                const std::map<std::string, std::string>& substitutions);

  // Throws DataError when substitutions are not total, i.e. some (term, g')
  // pair with g' != group(term) lacks a replacement.
  void require_total_substitutions() const;

  const std::string& bias_type() const { return bias_type_; }
  const std::vector<std::string>& groups() const { return groups_; }
  const std::vector<std::string>& terms(const std::string& group) const;
  std::optional<std::string> group_of(const std::string& term) const;
  // Throws DataError naming the term and target group when no pair exists.
  const std::string& substitute(const std::string& term, const std::string& target_group) const;

  // Every term of the bias type, in insertion order.
  std::vector<std::string> all_terms() const;

  Json to_json_records() const;

 private:
  std::string bias_type_;
  std::vector<std::string> groups_;
  std::map<std::string, std::vector<std::string>> terms_;
  std::map<std::string, std::string> group_of_;
  std::map<std::string, std::map<std::string, std::string>> substitutions_;
  std::vector<std::string> term_order_;
};

// Parses vocabulary records {bias_type, group, term, substitutions:{g': t'}}.
// Returns one vocabulary per bias type. Overlapping terms across groups of a
// bias type are rejected; with `strict` (the default) substitutions must be
// total as well.
std::map<std::string, GroupVocabulary> vocabularies_from_records(const std::vector<Json>& records,
                                                                 bool strict = true);
std::map<std::string, GroupVocabulary> load_vocabularies(const std::filesystem::path& path,
                                                         bool strict = true);

// One lowercased term per line; blank lines and '#' comments ignored.
std::vector<std::string> load_term_list(const std::filesystem::path& path);

}  // namespace fairlens::corpus

#endif  // FAIRLENS_CORPUS_VOCABULARY_HPP_
