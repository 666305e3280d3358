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

#ifndef FAIRLENS_ATTRIBUTION_ATTENTION_PATHS_HPP_
#define FAIRLENS_ATTRIBUTION_ATTENTION_PATHS_HPP_

#include <vector>

#include "fairlens/model/classifier.hpp"

namespace fairlens::attribution {

using model::AttentionMaps;
using model::Matrix;
using model::Vector;

// Position(s) whose representation feeds f_c: every position equally for a
// mean-pooled model, the classification position for encoders, the answer
// position for decoders.
enum class Aggregation { kMeanPool, kFirst, kLast };

Aggregation aggregation_for(model::ModelKind kind);

// Weight of each query position in the aggregated row; sums to one.
Vector aggregation_weights(Aggregation agg, Eigen::Index n);

// Per-layer mean over heads.
std::vector<Matrix> head_means(const AttentionMaps& maps);

// 0.5 * A + 0.5 * I per layer: attention adjusted for the residual stream.
std::vector<Matrix> residual_adjusted(const std::vector<Matrix>& layer_attention);

// Attention received by each token from the aggregation position, averaged
// over heads and then layers.
Vector received_attention(const AttentionMaps& maps, Aggregation agg);

// Product of the residual-adjusted layer matrices, last layer leftmost.
// Row q is the distribution of output position q over input tokens.
Matrix rollout_matrix(const std::vector<Matrix>& adjusted);

Vector rollout_scores(const AttentionMaps& maps, Aggregation agg);

// Max-flow from the aggregation position(s) through the layered attention
// graph (capacities = residual-adjusted weights) to each input token,
// normalized to sum to one.
struct FlowResult {
  Vector raw_flow;  // unnormalized max-flow value per input token
  Vector scores;    // raw_flow / raw_flow.sum()
  // cuts[j][l](q, i) = 1 if the edge from position q of layer l+1 to position
  // i of layer l crosses the minimum cut found for target token j. This is
  // the derivative of raw_flow[j] with respect to that edge's capacity.
  std::vector<std::vector<Matrix>> cuts;
};

FlowResult attention_flow(const std::vector<Matrix>& adjusted, Aggregation agg,
                          bool with_cuts = false);

Vector flow_scores(const AttentionMaps& maps, Aggregation agg);

}  // namespace fairlens::attribution

#endif  // FAIRLENS_ATTRIBUTION_ATTENTION_PATHS_HPP_
