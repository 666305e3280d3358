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

#ifndef FAIRLENS_MODEL_DECODER_HPP_
#define FAIRLENS_MODEL_DECODER_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <utility>

#include "fairlens/model/classifier.hpp"
#include "fairlens/model/prompt.hpp"
#include "fairlens/model/reference_model.hpp"

namespace fairlens::model {

// Text-in interface to a generative model, decoded greedily.
class LanguageModelBackend {
 public:
  virtual ~LanguageModelBackend() = default;
  // Logits of the "Yes" and "No" answer tokens at the first generated position.
  virtual std::pair<double, double> answer_logits(const std::string& prompt) const = 0;
  virtual std::string generate(const std::string& prompt) const = 0;
  virtual std::string digest() const = 0;
};

// Classifier view of a prompted decoder: f_toxic is the two-way softmax over
// the Yes/No logits. Inputs are the sentence tokens, joined by single spaces
// into the sentence slot of the prompt.
class PromptedDecoder final : public Classifier {
 public:
  PromptedDecoder(std::shared_ptr<const LanguageModelBackend> backend, PromptTemplate prompt,
                  std::size_t max_length = 256);

  ModelKind kind() const override { return ModelKind::kDecoder; }
  Capabilities capabilities() const override;
  std::size_t max_length() const override { return max_length_; }
  std::string digest() const override;
  Probabilities predict_proba(std::span<const std::string> tokens) const override;

  const PromptTemplate& prompt() const { return prompt_; }
  const LanguageModelBackend& backend() const { return *backend_; }

  // The model's own Yes/No classification answer for `e`.
  Answer classify(const corpus::Example& e) const;
  // Continuation after a self-reflection or self-attribution follow-up.
  std::string follow_up(const corpus::Example& e, const PromptTemplate& follow_up) const;

 private:
  std::shared_ptr<const LanguageModelBackend> backend_;
  PromptTemplate prompt_;
  std::size_t max_length_;
};

// Backend answering from recorded outputs of an external model. Records are
// JSON lines {prompt_digest, yes_logit, no_logit, continuation}; digests are
// short_digest(prompt). Unknown prompts throw DataError and are remembered so
// they can be exported for an offline run.
class ReplayBackend final : public LanguageModelBackend {
 public:
  explicit ReplayBackend(const std::filesystem::path& path);

  std::pair<double, double> answer_logits(const std::string& prompt) const override;
  std::string generate(const std::string& prompt) const override;
  std::string digest() const override { return digest_; }

  std::size_t size() const { return records_.size(); }
  // Writes {prompt_digest, prompt} lines for every prompt that was missing.
  void export_missing(const std::filesystem::path& path) const;
  std::size_t missing_count() const;

 private:
  struct Record {
    double yes_logit = 0.0;
    double no_logit = 0.0;
    std::string continuation;
  };
  const Record& find(const std::string& prompt) const;

  std::map<std::string, Record> records_;
  std::string digest_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::string> missing_;
};

// Deterministic stand-in for a decoder, driven by a reference classifier.
// Yes/No logits are the classifier's toxic/non-toxic logits on the sentence
// slot. Follow-ups are answered from the classifier's behaviour: the
// self-reflection answer is Yes when replacing the sensitive terms by [PAD]
// moves p_toxic by more than `reflection_threshold`; self-attribution lists
// the words with the largest absolute occlusion effect.
class ReferenceBackedBackend final : public LanguageModelBackend {
 public:
  ReferenceBackedBackend(ReferenceModel model, std::set<std::string> sensitive_terms,
                         double reflection_threshold = 0.1);

  std::pair<double, double> answer_logits(const std::string& prompt) const override;
  std::string generate(const std::string& prompt) const override;
  std::string digest() const override;

  const ReferenceModel& model() const { return model_; }

 private:
  ReferenceModel model_;
  std::set<std::string> sensitive_;
  double threshold_;
};

// Sentence slot of a rendered prompt (the text after the last "Sentence: "
// that precedes the classification question).
std::string sentence_slot(const std::string& prompt);

}  // namespace fairlens::model

#endif  // FAIRLENS_MODEL_DECODER_HPP_
