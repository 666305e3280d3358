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

#ifndef FAIRLENS_DEBIAS_PENALTY_HPP_
#define FAIRLENS_DEBIAS_PENALTY_HPP_

#include <span>
#include <string_view>
#include <vector>

#include "fairlens/corpus/example.hpp"
#include "fairlens/model/fine_tune.hpp"
#include "fairlens/model/reference_model.hpp"

namespace fairlens::debias {

// Explanation methods that can be trained against, plus the attention-entropy
// baseline.
enum class DebiasMethod {
  kAttention,
  kAttnRollout,
  kAttnFlow,
  kGradL1,
  kGradL2,
  kIxgL1,
  kIxgL2,
  kOcclusionSimplified,
  kAttentionEntropy,
};

const std::vector<DebiasMethod>& trainable_methods();
std::string_view to_string(DebiasMethod m);
// Rejects DeepLift, KernelSHAP and IntGrad variants with a ConfigError.
DebiasMethod debias_method_from_string(std::string_view name);

// Per-example reliance penalty, averaged over the example's sensitive tokens
// (0 when it has none). `cache` is the forward pass of ex.ids, possibly with
// dropout masks, which every extra pass reuses. When `grads` is non-empty,
// scale * dP/dtheta is added to it. The attention-entropy method returns the
// negative mean attention-row entropy instead.
//
// The grad and ixg families differentiate through the input gradient; that
// Hessian-vector product is taken by central differences of the parameter
// gradient along the normalized direction, with step `fd_step`.
double penalty(const model::ReferenceModel& model, const model::EncodedExample& ex,
               const model::ForwardCache& cache, DebiasMethod method, std::span<double> grads = {},
               double scale = 1.0, double fd_step = 1e-4);

// Mean penalty over a batch, without dropout.
double debias_loss(const model::ReferenceModel& model, const std::vector<corpus::Example>& batch,
                   DebiasMethod method);

// Regularizer hook adding alpha * penalty to the task loss.
model::RegularizerHook make_regularizer(DebiasMethod method, double alpha);

// Shannon entropy (nats) of a probability row.
double row_entropy(std::span<const double> p);
// Mean row entropy over every layer, head and query row.
double mean_attention_entropy(const model::AttentionMaps& maps);

// -weight * mean attention entropy over the batch.
double attention_entropy_regularizer(const model::ReferenceModel& model,
                                     const std::vector<corpus::Example>& batch, double weight);

}  // namespace fairlens::debias

#endif  // FAIRLENS_DEBIAS_PENALTY_HPP_
