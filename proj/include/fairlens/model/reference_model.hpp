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

#ifndef FAIRLENS_MODEL_REFERENCE_MODEL_HPP_
#define FAIRLENS_MODEL_REFERENCE_MODEL_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairlens/model/classifier.hpp"

namespace fairlens::model {

inline constexpr const char* kPadToken = "[PAD]";
inline constexpr const char* kUnkToken = "[UNK]";
inline constexpr const char* kMaskToken = "[MASK]";

// Pre-LN transformer encoder with learned positional embeddings, mean pooling
// and a linear two-class head. Small enough for finite-difference checks.
struct ReferenceConfig {
  int dim = 64;
  int heads = 4;
  int layers = 2;
  int ff_dim = 128;
  int max_length = 64;
  double init_std = 0.02;
  double layer_norm_eps = 1e-5;
};

// Offsets of every parameter block inside the flat parameter vector.
struct ParamLayout {
  struct Layer {
    std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    std::size_t ln2_g, ln2_b, w1, b1, w2, b2;
  };
  std::size_t tok_emb = 0;
  std::size_t pos_emb = 0;
  std::vector<Layer> layers;
  std::size_t lnf_g = 0, lnf_b = 0, wc = 0, bc = 0;
  std::size_t total = 0;

  ParamLayout() = default;
  ParamLayout(const ReferenceConfig& config, std::size_t vocab_size);
};

// Inverted-dropout masks on the two residual branches of every layer.
struct DropoutMasks {
  std::vector<Matrix> attention;  // n x dim, entries 0 or 1/(1-p)
  std::vector<Matrix> feed_forward;
};

struct LayerCache {
  Matrix h_in, xhat1, u1, q, k, v, o, attn_out;
  Vector rstd1;
  std::vector<Matrix> attn;  // per head
  Matrix h_mid, xhat2, u2, z, g, f;
  Vector rstd2;
};

struct ForwardCache {
  Matrix input;
  std::vector<LayerCache> layers;
  Matrix h_last, xhat_f, hf;
  Vector rstd_f;
  Eigen::RowVectorXd pooled;
  double logit_toxic = 0.0;
  double logit_non_toxic = 0.0;
  Probabilities probs;
  const DropoutMasks* masks = nullptr;
};

// Upstream gradients fed into a backward pass.
struct BackwardSeed {
  double d_logit_toxic = 0.0;
  double d_logit_non_toxic = 0.0;
  // Extra gradient on the post-softmax attention maps ([layer][head]).
  const AttentionMaps* d_attention = nullptr;
  // When set, GELU derivatives are replaced by DeepLift rescale multipliers
  // relative to this baseline pass.
  const ForwardCache* deeplift_baseline = nullptr;
};

// d f_c / d (z_toxic, z_nontoxic) for the two-way softmax.
std::pair<double, double> probability_logit_grad(const Probabilities& p, Label c);

class ReferenceModel final : public Classifier {
 public:
  // `vocabulary` need not contain the special tokens; they are placed first.
  static ReferenceModel create(const std::vector<std::string>& vocabulary,
                               const ReferenceConfig& config, std::uint64_t seed);

  // Rebuilds a model from a full vocabulary (special tokens included, in
  // order) and a flat parameter vector.
  static ReferenceModel from_parameters(std::vector<std::string> vocabulary,
                                        const ReferenceConfig& config, std::vector<double> params);

  // Vocabulary of every token in `examples` plus `extra_tokens`, sorted.
  static std::vector<std::string> build_vocabulary(const std::vector<corpus::Example>& examples,
                                                   const std::vector<std::string>& extra_tokens = {});

  ModelKind kind() const override { return ModelKind::kReference; }
  Capabilities capabilities() const override;
  std::size_t max_length() const override { return static_cast<std::size_t>(config_.max_length); }
  std::string digest() const override;

  Probabilities predict_proba(std::span<const std::string> tokens) const override;
  Matrix embeddings(std::span<const std::string> tokens) const override;
  Probabilities predict_from_embeddings(const Matrix& embeddings) const override;
  Matrix gradients_of(Label c, const Matrix& embeddings) const override;
  AttentionMaps attentions(std::span<const std::string> tokens) const override;
  Matrix deeplift_multipliers(Label c, const Matrix& embeddings,
                              const Matrix& baseline) const override;

  // Training-level access.
  std::vector<int> encode(std::span<const std::string> tokens) const;
  Matrix lookup(std::span<const int> ids) const;
  ForwardCache forward(const Matrix& embeddings, const DropoutMasks* masks = nullptr) const;
  // Returns the gradient with respect to the input embeddings. When `grads`
  // is non-empty (size num_parameters()), parameter gradients are added to it;
  // the token-embedding table is left to scatter_embedding_grad.
  Matrix backward(const ForwardCache& cache, const BackwardSeed& seed,
                  std::span<double> grads) const;
  void scatter_embedding_grad(std::span<const int> ids, const Matrix& d_embeddings,
                              std::span<double> grads) const;
  DropoutMasks sample_dropout(int n, double p, std::mt19937_64& rng) const;

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t num_parameters() const { return params_.size(); }
  const ParamLayout& layout() const { return layout_; }
  const ReferenceConfig& config() const { return config_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  int token_id(const std::string& token) const;

  // Zeroes the classification head so every prediction is (0.5, 0.5).
  void zero_head();

 private:
  ReferenceModel(std::vector<std::string> vocab, const ReferenceConfig& config);

  ReferenceConfig config_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  ParamLayout layout_;
  std::vector<double> params_;
};

}  // namespace fairlens::model

#endif  // FAIRLENS_MODEL_REFERENCE_MODEL_HPP_
