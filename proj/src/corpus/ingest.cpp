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

#include "fairlens/corpus/ingest.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

namespace fairlens::corpus {

CorpusFormat corpus_format_from_string(const std::string& name) {
  if (name == "generic") return CorpusFormat::kGeneric;
  if (name == "civil_comments" || name == "civil-comments") return CorpusFormat::kCivilComments;
  if (name == "jigsaw") return CorpusFormat::kJigsaw;
  throw ConfigError("unknown corpus format \"" + name + "\"");
}

namespace {

std::optional<double> score_field(const Json& j, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (!j.contains(name)) continue;
    const auto& v = j.at(name);
    if (v.is_number()) return v.get<double>();
    if (v.is_boolean()) return v.get<bool>() ? 1.0 : 0.0;
    if (v.is_string()) {
      try {
        return label_from_string(v.get<std::string>()) == Label::kToxic ? 1.0 : 0.0;
      } catch (const DataError&) {
        return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

std::optional<std::string> id_field(const Json& j) {
  if (!j.contains("id")) return std::nullopt;
  const auto& v = j.at("id");
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return std::nullopt;
}

}  // namespace

std::optional<RawRecord> parse_raw_record(const Json& j, CorpusFormat format, std::size_t line_no,
                                          std::string* error) {
  auto fail = [&](const std::string& msg) -> std::optional<RawRecord> {
    if (error) *error = msg;
    return std::nullopt;
  };
  if (!j.is_object()) return fail("record is not an object");
  RawRecord r;
  const char* text_field = format == CorpusFormat::kJigsaw ? "comment_text" : "text";
  if (!j.contains(text_field) || !j.at(text_field).is_string()) {
    return fail(std::string("missing string field \"") + text_field + "\"");
  }
  r.text = j.at(text_field).get<std::string>();
  std::optional<double> score;
  switch (format) {
    case CorpusFormat::kGeneric:
      score = score_field(j, {"toxicity", "label"});
      break;
    case CorpusFormat::kCivilComments:
      score = score_field(j, {"toxicity", "label", "gold"});
      break;
    case CorpusFormat::kJigsaw:
      score = score_field(j, {"target", "toxicity"});
      break;
  }
  if (!score) return fail("missing or ill-typed toxicity score");
  r.toxicity = *score;
  auto id = id_field(j);
  if (!id) {
    if (format == CorpusFormat::kGeneric || format == CorpusFormat::kJigsaw) {
      return fail("missing id");
    }
    id = "line" + std::to_string(line_no);
  }
  r.id = *id;
  r.metadata = j;
  return r;
}

TermMatcher::TermMatcher(const GroupVocabulary& vocab) {
  for (const auto& term : vocab.all_terms()) {
    entries_.push_back({token_texts(term), term, *vocab.group_of(term)});
  }
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const Entry& a, const Entry& b) { return a.words.size() > b.words.size(); });
}

TermMatcher::TermMatcher(std::span<const std::string> plain_terms) {
  for (const auto& term : plain_terms) {
    auto words = token_texts(term);
    if (!words.empty()) entries_.push_back({std::move(words), term, ""});
  }
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const Entry& a, const Entry& b) { return a.words.size() > b.words.size(); });
}

std::vector<SensitiveSpan> TermMatcher::find(const std::vector<Token>& tokens) const {
  std::vector<SensitiveSpan> out;
  const std::size_t n = tokens.size();
  std::size_t i = 0;
  while (i < n) {
    const Entry* hit = nullptr;
    for (const auto& e : entries_) {
      if (i + e.words.size() > n) continue;
      bool ok = true;
      for (std::size_t k = 0; k < e.words.size() && ok; ++k) ok = tokens[i + k].text == e.words[k];
      if (ok) {
        hit = &e;
        break;
      }
    }
    if (hit) {
      out.push_back({static_cast<int>(i), static_cast<int>(i + hit->words.size()), hit->term,
                     hit->group});
      i += hit->words.size();
    } else {
      ++i;
    }
  }
  return out;
}

IngestResult ingest(std::span<const RawRecord> records, const GroupVocabulary& vocab,
                    std::span<const std::string> exclusion_terms, const IngestOptions& options) {
  const TermMatcher matcher(vocab);
  const TermMatcher excluder(exclusion_terms);
  IngestResult result;
  for (const auto& r : records) {
    ++result.stats.read;
    auto tokens = tokenize(r.text);
    if (!excluder.find(tokens).empty()) {
      ++result.stats.excluded;
      continue;
    }
    auto spans = matcher.find(tokens);
    if (spans.empty()) {
      ++result.stats.no_terms;
      continue;
    }
    std::set<std::string> groups;
    for (const auto& s : spans) groups.insert(s.group);
    if (groups.size() != 1) {
      ++result.stats.multiple_groups;
      continue;
    }
    Example e;
    e.id = r.id;
    e.text = r.text;
    e.tokens.reserve(tokens.size());
    for (auto& t : tokens) e.tokens.push_back(std::move(t.text));
    e.label = r.toxicity >= options.toxicity_threshold ? Label::kToxic : Label::kNonToxic;
    e.bias_type = vocab.bias_type();
    e.group = *groups.begin();
    e.sensitive_spans = std::move(spans);
    result.examples.push_back(std::move(e));
    ++result.stats.kept;
  }
  return result;
}

IngestResult ingest_file(const std::filesystem::path& path, CorpusFormat format,
                         const GroupVocabulary& vocab, std::span<const std::string> exclusion_terms,
                         const IngestOptions& options) {
  std::size_t malformed = 0;
  auto lines = read_jsonl(path, [&](std::size_t line, const std::string& msg) {
    spdlog::warn("{}:{}: skipping undecodable record: {}", path.string(), line, msg);
    ++malformed;
  });
  std::vector<RawRecord> raw;
  raw.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string error;
    if (auto r = parse_raw_record(lines[i], format, i + 1, &error)) {
      raw.push_back(std::move(*r));
    } else {
      spdlog::warn("{}: record {}: skipped: {}", path.string(), i + 1, error);
      ++malformed;
    }
  }
  auto result = ingest(raw, vocab, exclusion_terms, options);
  result.stats.malformed = malformed;
  result.stats.read += malformed;
  return result;
}

std::vector<RawRecord> to_raw_records(std::span<const Example> examples) {
  std::vector<RawRecord> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    out.push_back({e.id, e.text, e.label == Label::kToxic ? 1.0 : 0.0, Json::object()});
  }
  return out;
}

}  // namespace fairlens::corpus
