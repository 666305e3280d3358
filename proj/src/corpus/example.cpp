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

#include "fairlens/corpus/example.hpp"

#include <algorithm>

namespace fairlens::corpus {

std::vector<int> Example::sensitive_token_indices() const {
  std::vector<int> out;
  for (const auto& s : sensitive_spans) {
    for (int i = s.start; i < s.end; ++i) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Json to_json(const Example& e) {
  Json spans = Json::array();
  for (const auto& s : e.sensitive_spans) {
    spans.push_back(Json{{"start", s.start}, {"end", s.end}, {"term", s.term}, {"group", s.group}});
  }
  return Json{{"id", e.id},
              {"text", e.text},
              {"tokens", e.tokens},
              {"label", std::string(to_string(e.label))},
              {"bias_type", e.bias_type},
              {"group", e.group},
              {"spans", spans}};
}

Example example_from_json(const Json& j) {
  Example e;
  try {
    e.id = j.at("id").get<std::string>();
    e.text = j.at("text").get<std::string>();
    e.tokens = j.at("tokens").get<std::vector<std::string>>();
    e.label = label_from_string(j.at("label").get<std::string>());
    e.bias_type = j.at("bias_type").get<std::string>();
    e.group = j.at("group").get<std::string>();
    for (const auto& s : j.at("spans")) {
      e.sensitive_spans.push_back({s.at("start").get<int>(), s.at("end").get<int>(),
                                   s.at("term").get<std::string>(),
                                   s.at("group").get<std::string>()});
    }
  } catch (const Json::exception& ex) {
    throw DataError(std::string("malformed example record: ") + ex.what());
  }
  return e;
}

void save_examples(const std::filesystem::path& path, const std::vector<Example>& examples) {
  std::vector<Json> records;
  records.reserve(examples.size());
  for (const auto& e : examples) records.push_back(to_json(e));
  write_jsonl(path, records);
}

std::vector<Example> load_examples(const std::filesystem::path& path) {
  std::vector<Example> out;
  for (const auto& r : read_jsonl(path)) out.push_back(example_from_json(r));
  return out;
}

std::map<std::string, std::size_t> group_counts(const std::vector<Example>& examples) {
  std::map<std::string, std::size_t> out;
  for (const auto& e : examples) ++out[e.group];
  return out;
}

}  // namespace fairlens::corpus
