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

#include "fairlens/corpus/vocabulary.hpp"

#include <algorithm>
#include <fstream>

#include "fairlens/common.hpp"
#include "fairlens/corpus/tokenizer.hpp"

namespace fairlens::corpus {
namespace {

// Normalized form: token texts joined by single spaces.
std::string normalize_term(const std::string& term) {
  std::string out;
  for (const auto& t : token_texts(term)) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace

void GroupVocabulary::add_term(const std::string& group, const std::string& raw_term,
                               const std::map<std::string, std::string>& substitutions) {
  const std::string term = normalize_term(raw_term);
  if (term.empty()) throw DataError("empty identity term in group " + group);
  if (auto it = group_of_.find(term); it != group_of_.end()) {
    if (it->second != group) {
      throw DataError("term \"" + term + "\" appears in groups " + it->second + " and " + group +
                      " of bias type " + bias_type_);
    }
  } else {
    group_of_[term] = group;
    term_order_.push_back(term);
    terms_[group].push_back(term);
  }
  if (std::find(groups_.begin(), groups_.end(), group) == groups_.end()) groups_.push_back(group);
  auto& subs = substitutions_[term];
  for (const auto& [g, t] : substitutions) {
    if (g == group) continue;
    subs[g] = normalize_term(t);
  }
}

void GroupVocabulary::require_total_substitutions() const {
  for (const auto& term : term_order_) {
    const auto& g = group_of_.at(term);
    for (const auto& target : groups_) {
      if (target == g) continue;
      substitute(term, target);
    }
  }
}

const std::vector<std::string>& GroupVocabulary::terms(const std::string& group) const {
  auto it = terms_.find(group);
  if (it == terms_.end()) throw DataError("unknown group \"" + group + "\" for " + bias_type_);
  return it->second;
}

std::optional<std::string> GroupVocabulary::group_of(const std::string& term) const {
  auto it = group_of_.find(term);
  if (it == group_of_.end()) return std::nullopt;
  return it->second;
}

const std::string& GroupVocabulary::substitute(const std::string& term,
                                               const std::string& target_group) const {
  auto it = substitutions_.find(term);
  if (it != substitutions_.end()) {
    auto jt = it->second.find(target_group);
    if (jt != it->second.end()) return jt->second;
  }
  throw DataError("no substitution for term \"" + term + "\" into group \"" + target_group + "\"");
}

std::vector<std::string> GroupVocabulary::all_terms() const { return term_order_; }

Json GroupVocabulary::to_json_records() const {
  Json out = Json::array();
  for (const auto& term : term_order_) {
    Json subs = Json::object();
    for (const auto& [g, t] : substitutions_.at(term)) subs[g] = t;
    out.push_back(Json{{"bias_type", bias_type_},
                       {"group", group_of_.at(term)},
                       {"term", term},
                       {"substitutions", subs}});
  }
  return out;
}

std::map<std::string, GroupVocabulary> vocabularies_from_records(const std::vector<Json>& records,
                                                                 bool strict) {
  std::map<std::string, GroupVocabulary> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    try {
      const auto bias_type = r.at("bias_type").get<std::string>();
      const auto group = r.at("group").get<std::string>();
      const auto term = r.at("term").get<std::string>();
      std::map<std::string, std::string> subs;
      if (r.contains("substitutions")) {
        for (const auto& [g, t] : r.at("substitutions").items()) subs[g] = t.get<std::string>();
      }
      auto [it, inserted] = out.try_emplace(bias_type, bias_type);
      it->second.add_term(group, term, subs);
    } catch (const Json::exception& e) {
      throw DataError("vocabulary record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (strict) {
    for (const auto& [_, vocab] : out) vocab.require_total_substitutions();
  }
  return out;
}

std::map<std::string, GroupVocabulary> load_vocabularies(const std::filesystem::path& path,
                                                         bool strict) {
  return vocabularies_from_records(read_jsonl(path), strict);
}

std::vector<std::string> load_term_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find('#');
    if (pos != std::string::npos) line.resize(pos);
    auto norm = normalize_term(line);
    if (!norm.empty()) out.push_back(norm);
  }
  return out;
}

}  // namespace fairlens::corpus
