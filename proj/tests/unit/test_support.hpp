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

#ifndef FAIRLENS_TESTS_TEST_SUPPORT_HPP_
#define FAIRLENS_TESTS_TEST_SUPPORT_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fairlens/corpus/example.hpp"
#include "fairlens/corpus/vocabulary.hpp"
#include "fairlens/model/reference_model.hpp"

namespace fairlens::testing {

// race: black / white; gender: female / male; religion: christian / muslim / jewish.
corpus::GroupVocabulary race_vocab();
corpus::GroupVocabulary gender_vocab();
corpus::GroupVocabulary religion_vocab();

corpus::Example make_example(const std::string& id, const std::string& text, Label label,
                             const corpus::GroupVocabulary& vocab);

// Randomly initialized reference model over a small fixed vocabulary. Weights
// are scaled up so gradients are not vanishingly small.
model::ReferenceModel small_model(std::uint64_t seed, double init_std = 0.3);

std::vector<std::string> words(const std::string& text);

// Prediction-only classifier backed by a function of the tokens.
class FunctionClassifier final : public model::Classifier {
 public:
  using Fn = std::function<Probabilities(std::span<const std::string>)>;
  explicit FunctionClassifier(Fn fn, std::size_t max_length = 64)
      : fn_(std::move(fn)), max_length_(max_length) {}

  model::ModelKind kind() const override { return model::ModelKind::kEncoder; }
  model::Capabilities capabilities() const override {
    model::Capabilities c;
    c.mask_token = "[MASK]";
    c.pad_token = "[PAD]";
    return c;
  }
  std::size_t max_length() const override { return max_length_; }
  std::string digest() const override { return "function"; }
  Probabilities predict_proba(std::span<const std::string> tokens) const override {
    return fn_(tokens);
  }

 private:
  Fn fn_;
  std::size_t max_length_;
};

// p_toxic = 0.9 if any token is in `toxic_words`, else 0.1.
FunctionClassifier keyword_classifier(std::vector<std::string> toxic_words);

}  // namespace fairlens::testing

#endif  // FAIRLENS_TESTS_TEST_SUPPORT_HPP_
