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

#ifndef FAIRLENS_MODEL_CLASSIFIER_HPP_
#define FAIRLENS_MODEL_CLASSIFIER_HPP_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fairlens/common.hpp"
#include "fairlens/corpus/example.hpp"

namespace fairlens::model {

// Activations are row-major: one row per token.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// attention[layer][head] is an n x n row-stochastic matrix; row q holds the
// weights query position q puts on every key position.
using AttentionMaps = std::vector<std::vector<Matrix>>;

enum class ModelKind { kEncoder, kDecoder, kReference };

std::string_view to_string(ModelKind kind);

struct Capabilities {
  bool gradients_available = false;
  bool attentions_available = false;
  bool deeplift_available = false;
  std::string mask_token;
  std::string pad_token;

  // Token used to remove a token from the input: [MASK] for encoders and the
  // reference model, [PAD] for decoders.
  const std::string& replacement_token(ModelKind kind) const {
    return kind == ModelKind::kDecoder ? pad_token : mask_token;
  }
};

// Adapter surface every backend implements. Inputs are the word tokens of an
// example; backends map them to their own vocabulary. Embedding-level
// endpoints work on the n x d matrix of input token embeddings (positional
// information is added inside the model).
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ModelKind kind() const = 0;
  virtual Capabilities capabilities() const = 0;
  virtual std::size_t max_length() const = 0;
  virtual std::string digest() const = 0;

  // Deterministic; components sum to 1.
  virtual Probabilities predict_proba(std::span<const std::string> tokens) const = 0;

  virtual Matrix embeddings(std::span<const std::string> tokens) const;
  virtual Probabilities predict_from_embeddings(const Matrix& embeddings) const;
  // d f_c / d embeddings, same shape as the input.
  virtual Matrix gradients_of(Label c, const Matrix& embeddings) const;
  virtual AttentionMaps attentions(std::span<const std::string> tokens) const;
  // DeepLift rescale-rule multipliers of f_c with respect to the input
  // embeddings, relative to `baseline`. Contributions are
  // (embeddings - baseline) .* multipliers.
  virtual Matrix deeplift_multipliers(Label c, const Matrix& embeddings,
                                      const Matrix& baseline) const;

  std::string replacement_token() const { return capabilities().replacement_token(kind()); }
};

// Tokens clipped to the model's maximum length; `truncated` reports whether
// anything was dropped.
std::span<const std::string> model_input(const Classifier& model, const corpus::Example& e,
                                         bool* truncated = nullptr);

// predict_proba on an example, truncating (and logging once per call site) if
// it exceeds the model's length limit.
Probabilities predict_proba(const Classifier& model, const corpus::Example& e,
                            bool* truncated = nullptr);

}  // namespace fairlens::model

#endif  // FAIRLENS_MODEL_CLASSIFIER_HPP_
