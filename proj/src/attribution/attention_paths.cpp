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

#include "fairlens/attribution/attention_paths.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "fairlens/common.hpp"

namespace fairlens::attribution {

Aggregation aggregation_for(model::ModelKind kind) {
  switch (kind) {
    case model::ModelKind::kReference:
      return Aggregation::kMeanPool;
    case model::ModelKind::kEncoder:
      return Aggregation::kFirst;
    case model::ModelKind::kDecoder:
      return Aggregation::kLast;
  }
  return Aggregation::kMeanPool;
}

Vector aggregation_weights(Aggregation agg, Eigen::Index n) {
  Vector w = Vector::Zero(n);
  switch (agg) {
    case Aggregation::kMeanPool:
      w.setConstant(1.0 / static_cast<double>(n));
      break;
    case Aggregation::kFirst:
      w(0) = 1.0;
      break;
    case Aggregation::kLast:
      w(n - 1) = 1.0;
      break;
  }
  return w;
}

std::vector<Matrix> head_means(const AttentionMaps& maps) {
  std::vector<Matrix> out;
  out.reserve(maps.size());
  for (const auto& layer : maps) {
    if (layer.empty()) throw DataError("attention layer without heads");
    Matrix m = layer.front();
    for (std::size_t h = 1; h < layer.size(); ++h) m += layer[h];
    out.push_back(m / static_cast<double>(layer.size()));
  }
  return out;
}

std::vector<Matrix> residual_adjusted(const std::vector<Matrix>& layer_attention) {
  std::vector<Matrix> out;
  out.reserve(layer_attention.size());
  for (const auto& a : layer_attention) {
    out.push_back(0.5 * a + 0.5 * Matrix::Identity(a.rows(), a.cols()));
  }
  return out;
}

Vector received_attention(const AttentionMaps& maps, Aggregation agg) {
  auto means = head_means(maps);
  const auto n = means.front().rows();
  const Vector w = aggregation_weights(agg, n);
  Vector out = Vector::Zero(n);
  for (const auto& a : means) out += a.transpose() * w;
  return out / static_cast<double>(means.size());
}

Matrix rollout_matrix(const std::vector<Matrix>& adjusted) {
  Matrix r = adjusted.front();
  for (std::size_t l = 1; l < adjusted.size(); ++l) r = adjusted[l] * r;
  return r;
}

Vector rollout_scores(const AttentionMaps& maps, Aggregation agg) {
  Matrix r = rollout_matrix(residual_adjusted(head_means(maps)));
  return r.transpose() * aggregation_weights(agg, r.rows());
}

namespace {

// Dinic max-flow on a small dense-ish graph with real capacities.
class FlowNetwork {
 public:
  explicit FlowNetwork(int nodes) : adj_(static_cast<std::size_t>(nodes)) {}

  int add_edge(int from, int to, double cap) {
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({to, cap});
    edges_.push_back({from, 0.0});
    adj_[static_cast<std::size_t>(from)].push_back(id);
    adj_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  double max_flow(int s, int t) {
    double total = 0.0;
    while (bfs(s, t)) {
      it_.assign(adj_.size(), 0);
      while (true) {
        const double pushed = dfs(s, t, std::numeric_limits<double>::infinity());
        if (pushed <= kEps) break;
        total += pushed;
      }
    }
    return total;
  }

  // Nodes reachable from s in the residual graph after max_flow.
  std::vector<bool> source_side(int s) const {
    std::vector<bool> seen(adj_.size(), false);
    std::queue<int> q;
    q.push(s);
    seen[static_cast<std::size_t>(s)] = true;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int id : adj_[static_cast<std::size_t>(u)]) {
        const auto& e = edges_[static_cast<std::size_t>(id)];
        if (e.cap > kEps && !seen[static_cast<std::size_t>(e.to)]) {
          seen[static_cast<std::size_t>(e.to)] = true;
          q.push(e.to);
        }
      }
    }
    return seen;
  }

 private:
  static constexpr double kEps = 1e-13;
  struct Edge {
    int to;
    double cap;
  };

  bool bfs(int s, int t) {
    level_.assign(adj_.size(), -1);
    std::queue<int> q;
    level_[static_cast<std::size_t>(s)] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int id : adj_[static_cast<std::size_t>(u)]) {
        const auto& e = edges_[static_cast<std::size_t>(id)];
        if (e.cap > kEps && level_[static_cast<std::size_t>(e.to)] < 0) {
          level_[static_cast<std::size_t>(e.to)] = level_[static_cast<std::size_t>(u)] + 1;
          q.push(e.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(t)] >= 0;
  }

  double dfs(int u, int t, double limit) {
    if (u == t) return limit;
    auto& i = it_[static_cast<std::size_t>(u)];
    for (; i < adj_[static_cast<std::size_t>(u)].size(); ++i) {
      const int id = adj_[static_cast<std::size_t>(u)][i];
      auto& e = edges_[static_cast<std::size_t>(id)];
      if (e.cap <= kEps ||
          level_[static_cast<std::size_t>(e.to)] != level_[static_cast<std::size_t>(u)] + 1) {
        continue;
      }
      const double pushed = dfs(e.to, t, std::min(limit, e.cap));
      if (pushed > kEps) {
        e.cap -= pushed;
        edges_[static_cast<std::size_t>(id ^ 1)].cap += pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> it_;
};

}  // namespace

FlowResult attention_flow(const std::vector<Matrix>& adjusted, Aggregation agg, bool with_cuts) {
  const auto layers = static_cast<int>(adjusted.size());
  const auto n = static_cast<int>(adjusted.front().rows());
  const Vector w = aggregation_weights(agg, n);
  // Node (l, i) -> l * n + i for l in [0, layers]; source is the last node.
  auto node = [n](int l, int i) { return l * n + i; };
  const int source = (layers + 1) * n;

  FlowResult result;
  result.raw_flow = Vector::Zero(n);
  for (int target = 0; target < n; ++target) {
    FlowNetwork net(source + 1);
    for (int q = 0; q < n; ++q) {
      if (w(q) > 0) net.add_edge(source, node(layers, q), w(q));
    }
    // edge_ids[l][q * n + i] for the edge (l+1, q) -> (l, i).
    std::vector<std::vector<int>> edge_ids(static_cast<std::size_t>(layers));
    for (int l = layers; l >= 1; --l) {
      const auto& a = adjusted[static_cast<std::size_t>(l - 1)];
      auto& ids = edge_ids[static_cast<std::size_t>(l - 1)];
      ids.assign(static_cast<std::size_t>(n * n), -1);
      for (int q = 0; q < n; ++q) {
        for (int i = 0; i < n; ++i) {
          if (a(q, i) > 0) ids[static_cast<std::size_t>(q * n + i)] = net.add_edge(node(l, q), node(l - 1, i), a(q, i));
        }
      }
    }
    result.raw_flow(target) = net.max_flow(source, node(0, target));
    if (with_cuts) {
      const auto side = net.source_side(source);
      std::vector<Matrix> cut;
      for (int l = 1; l <= layers; ++l) {
        Matrix c = Matrix::Zero(n, n);
        for (int q = 0; q < n; ++q) {
          if (!side[static_cast<std::size_t>(node(l, q))]) continue;
          for (int i = 0; i < n; ++i) {
            if (!side[static_cast<std::size_t>(node(l - 1, i))] &&
                edge_ids[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(q * n + i)] >= 0) {
              c(q, i) = 1.0;
            }
          }
        }
        cut.push_back(std::move(c));
      }
      result.cuts.push_back(std::move(cut));
    }
  }
  const double total = result.raw_flow.sum();
  if (!(total > 0)) throw NumericalError("attention flow: no flow reaches the inputs");
  result.scores = result.raw_flow / total;
  return result;
}

Vector flow_scores(const AttentionMaps& maps, Aggregation agg) {
  return attention_flow(residual_adjusted(head_means(maps)), agg).scores;
}

}  // namespace fairlens::attribution
