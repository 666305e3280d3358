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

#include "fairlens/model/classifier.hpp"

#include <spdlog/spdlog.h>

namespace fairlens::model {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kEncoder:
      return "encoder";
    case ModelKind::kDecoder:
      return "decoder";
    case ModelKind::kReference:
      return "reference";
  }
  return "unknown";
}

Matrix Classifier::embeddings(std::span<const std::string>) const {
  throw CapabilityError(std::string(to_string(kind())) + " backend exposes no embeddings");
}

Probabilities Classifier::predict_from_embeddings(const Matrix&) const {
  throw CapabilityError(std::string(to_string(kind())) + " backend cannot run on embeddings");
}

Matrix Classifier::gradients_of(Label, const Matrix&) const {
  throw CapabilityError(std::string(to_string(kind())) + " backend exposes no gradients");
}

AttentionMaps Classifier::attentions(std::span<const std::string>) const {
  throw CapabilityError(std::string(to_string(kind())) + " backend exposes no attentions");
}

Matrix Classifier::deeplift_multipliers(Label, const Matrix&, const Matrix&) const {
  throw CapabilityError(std::string(to_string(kind())) + " backend has no DeepLift rules");
}

std::span<const std::string> model_input(const Classifier& model, const corpus::Example& e,
                                         bool* truncated) {
  std::span<const std::string> tokens(e.tokens);
  const bool clip = tokens.size() > model.max_length();
  if (truncated) *truncated = clip;
  if (clip) tokens = tokens.first(model.max_length());
  return tokens;
}

Probabilities predict_proba(const Classifier& model, const corpus::Example& e, bool* truncated) {
  bool clip = false;
  auto tokens = model_input(model, e, &clip);
  if (clip) spdlog::debug("example {} truncated to {} tokens", e.id, model.max_length());
  if (truncated) *truncated = clip;
  return model.predict_proba(tokens);
}

}  // namespace fairlens::model
