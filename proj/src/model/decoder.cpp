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

#include "fairlens/model/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fairlens/digest.hpp"
#include "fairlens/jsonl.hpp"

namespace fairlens::model {

namespace {

std::string join(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

std::string sentence_slot(const std::string& prompt) {
  const std::string marker = "\n\nQuestion: Does this sentence contain toxicity?";
  auto q = prompt.rfind(marker);
  if (q == std::string::npos) throw DataError("prompt has no classification question");
  // The test sentence is the last slot before the final classification question.
  auto s = prompt.rfind("Sentence: ", q);
  if (s == std::string::npos) throw DataError("prompt has no sentence slot");
  s += 10;
  return prompt.substr(s, q - s);
}

PromptedDecoder::PromptedDecoder(std::shared_ptr<const LanguageModelBackend> backend,
                                 PromptTemplate prompt, std::size_t max_length)
    : backend_(std::move(backend)), prompt_(std::move(prompt)), max_length_(max_length) {
  if (prompt_.mode == PromptMode::kSelfReflection || prompt_.mode == PromptMode::kSelfAttribution) {
    throw ConfigError("a decoder classifies with a task prompt, not a follow-up");
  }
  render_task_prompt(prompt_, "");  // validates the template
}

Capabilities PromptedDecoder::capabilities() const {
  return Capabilities{false, false, false, kMaskToken, kPadToken};
}

std::string PromptedDecoder::digest() const {
  return DigestBuilder()
      .add("decoder")
      .add(backend_->digest())
      .add(render_task_prompt(prompt_, "{}"))
      .finish();
}

Probabilities PromptedDecoder::predict_proba(std::span<const std::string> tokens) const {
  const auto [yes, no] = backend_->answer_logits(render_task_prompt(prompt_, join(tokens)));
  if (!std::isfinite(yes) || !std::isfinite(no)) throw NumericalError("non-finite answer logits");
  return softmax2(yes, no);
}

Answer PromptedDecoder::classify(const corpus::Example& e) const {
  return model::predict_proba(*this, e).argmax() == Label::kToxic ? Answer::kYes : Answer::kNo;
}

std::string PromptedDecoder::follow_up(const corpus::Example& e, const PromptTemplate& follow) const {
  PromptTemplate t = follow;
  t.shots = prompt_.shots;
  corpus::Example sentence = e;
  sentence.text = join(model_input(*this, e));
  std::string prompt = render_prompt(t, sentence, classify(e));
  // Keep the task framing of the classifier (fairness prefixes) in front.
  if (prompt_.mode == PromptMode::kFairnessImagination ||
      prompt_.mode == PromptMode::kFairnessInstruction) {
    const auto task = render_task_prompt(prompt_, sentence.text);
    const auto plain = render_task_prompt(PromptTemplate{PromptMode::kZeroShot, "", 0, prompt_.shots},
                                          sentence.text);
    prompt = task.substr(0, task.size() - plain.size()) + prompt;
  }
  return backend_->generate(prompt);
}

ReplayBackend::ReplayBackend(const std::filesystem::path& path) {
  DigestBuilder b;
  for (const auto& j : read_jsonl(path)) {
    Record r;
    r.yes_logit = j.value("yes_logit", 0.0);
    r.no_logit = j.value("no_logit", 0.0);
    r.continuation = j.value("continuation", std::string());
    const auto key = j.at("prompt_digest").get<std::string>();
    records_[key] = r;
  }
  for (const auto& [k, r] : records_) b.add(k).add(r.yes_logit).add(r.no_logit).add(r.continuation);
  digest_ = b.finish();
}

const ReplayBackend::Record& ReplayBackend::find(const std::string& prompt) const {
  const auto key = short_digest(prompt);
  auto it = records_.find(key);
  if (it == records_.end()) {
    std::lock_guard lock(mutex_);
    missing_[key] = prompt;
    throw DataError("no recorded output for prompt " + key);
  }
  return it->second;
}

std::pair<double, double> ReplayBackend::answer_logits(const std::string& prompt) const {
  const auto& r = find(prompt);
  return {r.yes_logit, r.no_logit};
}

std::string ReplayBackend::generate(const std::string& prompt) const {
  return find(prompt).continuation;
}

std::size_t ReplayBackend::missing_count() const {
  std::lock_guard lock(mutex_);
  return missing_.size();
}

void ReplayBackend::export_missing(const std::filesystem::path& path) const {
  std::vector<Json> out;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [k, p] : missing_) {
      Json j;
      j["prompt_digest"] = k;
      j["prompt"] = p;
      out.push_back(j);
    }
  }
  write_jsonl(path, out);
}

ReferenceBackedBackend::ReferenceBackedBackend(ReferenceModel model,
                                               std::set<std::string> sensitive_terms,
                                               double reflection_threshold)
    : model_(std::move(model)), sensitive_(std::move(sensitive_terms)), threshold_(reflection_threshold) {}

std::pair<double, double> ReferenceBackedBackend::answer_logits(const std::string& prompt) const {
  auto tokens = split_ws(sentence_slot(prompt));
  if (tokens.size() > model_.max_length()) tokens.resize(model_.max_length());
  if (tokens.empty()) return {0.0, 0.0};
  const auto cache = model_.forward(model_.lookup(model_.encode(tokens)));
  return {cache.logit_toxic, cache.logit_non_toxic};
}

std::string ReferenceBackedBackend::generate(const std::string& prompt) const {
  auto tokens = split_ws(sentence_slot(prompt));
  if (tokens.size() > model_.max_length()) tokens.resize(model_.max_length());
  const double p = tokens.empty() ? 0.5 : model_.predict_proba(tokens).toxic;

  if (prompt.find("Was your previous answer influenced") != std::string::npos) {
    auto edited = tokens;
    for (auto& t : edited) {
      if (sensitive_.contains(t)) t = kPadToken;
    }
    const double shifted = edited.empty() ? 0.5 : model_.predict_proba(edited).toxic;
    return std::abs(p - shifted) > threshold_ ? "Yes" : "No";
  }
  const auto pos = prompt.find("Now select exactly ");
  if (pos != std::string::npos) {
    const int k = std::stoi(prompt.substr(pos + 19));
    std::vector<std::pair<double, std::size_t>> effect;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto edited = tokens;
      edited[i] = kPadToken;
      effect.push_back({-std::abs(p - model_.predict_proba(edited).toxic), i});
    }
    std::sort(effect.begin(), effect.end());
    std::string out;
    for (int i = 0; i < k && i < static_cast<int>(effect.size()); ++i) {
      if (i) out += ", ";
      out += tokens[effect[static_cast<std::size_t>(i)].second];
    }
    return out;
  }
  return p >= 0.5 ? "Yes" : "No";
}

std::string ReferenceBackedBackend::digest() const {
  DigestBuilder b;
  b.add("reference-backed").add(model_.digest()).add(threshold_);
  for (const auto& t : sensitive_) b.add(t);
  return b.finish();
}

}  // namespace fairlens::model
