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

#include "fairlens/debias/penalty.hpp"

#include <array>
#include <cmath>

#include "fairlens/attribution/attention_paths.hpp"

namespace fairlens::debias {

using model::AttentionMaps;
using model::BackwardSeed;
using model::EncodedExample;
using model::ForwardCache;
using model::Matrix;
using model::ReferenceModel;
using model::Vector;

namespace {

constexpr std::array<std::pair<DebiasMethod, std::string_view>, 9> kNames{{
    {DebiasMethod::kAttention, "attention"},
    {DebiasMethod::kAttnRollout, "attn_rollout"},
    {DebiasMethod::kAttnFlow, "attn_flow"},
    {DebiasMethod::kGradL1, "grad_l1"},
    {DebiasMethod::kGradL2, "grad_l2"},
    {DebiasMethod::kIxgL1, "ixg_l1"},
    {DebiasMethod::kIxgL2, "ixg_l2"},
    {DebiasMethod::kOcclusionSimplified, "occlusion_simplified"},
    {DebiasMethod::kAttentionEntropy, "attention_entropy"},
}};

AttentionMaps zero_maps(const ForwardCache& cache) {
  AttentionMaps out;
  for (const auto& lc : cache.layers) {
    std::vector<Matrix> heads;
    for (const auto& a : lc.attn) heads.push_back(Matrix::Zero(a.rows(), a.cols()));
    out.push_back(std::move(heads));
  }
  return out;
}

AttentionMaps cache_maps(const ForwardCache& cache) {
  AttentionMaps out;
  for (const auto& lc : cache.layers) out.push_back(lc.attn);
  return out;
}

// Spreads a gradient on the per-layer residual-adjusted head mean back onto
// every head: d/dA_h = 0.5 / H * d/dA_hat.
AttentionMaps from_adjusted(const std::vector<Matrix>& d_adjusted, const ForwardCache& cache) {
  AttentionMaps out = zero_maps(cache);
  for (std::size_t l = 0; l < out.size(); ++l) {
    const double w = 0.5 / static_cast<double>(out[l].size());
    for (auto& a : out[l]) a = w * d_adjusted[l];
  }
  return out;
}

// Adds scale * d(value)/dtheta given d(value)/d(attention maps).
void backprop_attention(const ReferenceModel& model, const EncodedExample& ex,
                        const ForwardCache& cache, const AttentionMaps& d_attention,
                        std::span<double> grads, double scale) {
  if (grads.empty()) return;
  AttentionMaps scaled = d_attention;
  for (auto& layer : scaled) {
    for (auto& a : layer) a *= scale;
  }
  BackwardSeed seed;
  seed.d_attention = &scaled;
  Matrix dx = model.backward(cache, seed, grads);
  model.scatter_embedding_grad(ex.ids, dx, grads);
}

// Total parameter gradient of f_toxic at input x (token-table rows included).
std::vector<double> toxic_gradient(const ReferenceModel& model, const EncodedExample& ex,
                                   const Matrix& x, const model::DropoutMasks* masks) {
  std::vector<double> g(model.num_parameters(), 0.0);
  auto cache = model.forward(x, masks);
  auto [dt, dn] = model::probability_logit_grad(cache.probs, Label::kToxic);
  Matrix dx = model.backward(cache, BackwardSeed{dt, dn}, g);
  model.scatter_embedding_grad(ex.ids, dx, g);
  return g;
}

double gradient_family(const ReferenceModel& model, const EncodedExample& ex,
                       const ForwardCache& cache, DebiasMethod method, std::span<double> grads,
                       double scale, double fd_step) {
  const bool l2 = method == DebiasMethod::kGradL2 || method == DebiasMethod::kIxgL2;
  const bool ixg = method == DebiasMethod::kIxgL1 || method == DebiasMethod::kIxgL2;
  const Matrix& x = cache.input;
  auto [dt, dn] = model::probability_logit_grad(cache.probs, Label::kToxic);
  const Matrix g = model.backward(cache, BackwardSeed{dt, dn}, {});
  const double inv = 1.0 / static_cast<double>(ex.sensitive.size());

  double value = 0.0;
  Matrix v = Matrix::Zero(x.rows(), x.cols());       // d value / d g
  Matrix direct = Matrix::Zero(x.rows(), x.cols());  // d value / d x, ixg only
  for (int j : ex.sensitive) {
    const Eigen::RowVectorXd a = ixg ? Eigen::RowVectorXd(x.row(j).cwiseProduct(g.row(j)))
                                     : Eigen::RowVectorXd(g.row(j));
    Eigen::RowVectorXd da;
    if (l2) {
      const double norm = a.norm();
      value += inv * norm;
      da = norm > 0 ? Eigen::RowVectorXd(a / norm) : Eigen::RowVectorXd::Zero(a.size());
    } else {
      value += inv * a.cwiseAbs().sum();
      da = a.unaryExpr([](double t) { return static_cast<double>((t > 0) - (t < 0)); });
    }
    da *= inv;
    if (ixg) {
      v.row(j) = da.cwiseProduct(x.row(j));
      direct.row(j) = da.cwiseProduct(g.row(j));
    } else {
      v.row(j) = da;
    }
  }
  if (grads.empty()) return value;

  if (ixg) {
    Matrix scaled = scale * direct;
    model.scatter_embedding_grad(ex.ids, scaled, grads);
  }
  const double vnorm = v.norm();
  if (vnorm == 0.0) return value;
  // d/dtheta <v, grad_x f> = d/de grad_theta f(x + e v) at e = 0.
  const Matrix dir = v / vnorm;
  const auto plus = toxic_gradient(model, ex, x + fd_step * dir, cache.masks);
  const auto minus = toxic_gradient(model, ex, x - fd_step * dir, cache.masks);
  const double w = scale * vnorm / (2.0 * fd_step);
  for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += w * (plus[i] - minus[i]);
  return value;
}

double attention_family(const ReferenceModel& model, const EncodedExample& ex,
                        const ForwardCache& cache, DebiasMethod method, std::span<double> grads,
                        double scale) {
  using attribution::Aggregation;
  const auto n = cache.input.rows();
  const Vector w = attribution::aggregation_weights(Aggregation::kMeanPool, n);
  Vector u = Vector::Zero(n);
  for (int j : ex.sensitive) u(j) = 1.0 / static_cast<double>(ex.sensitive.size());
  const auto maps = cache_maps(cache);
  const auto layers = maps.size();

  if (method == DebiasMethod::kAttention) {
    const Vector received = attribution::received_attention(maps, Aggregation::kMeanPool);
    const double value = received.dot(u);
    if (!grads.empty()) {
      AttentionMaps d = zero_maps(cache);
      for (std::size_t l = 0; l < layers; ++l) {
        const double c = 1.0 / static_cast<double>(layers * d[l].size());
        for (auto& a : d[l]) a = c * (w * u.transpose());
      }
      backprop_attention(model, ex, cache, d, grads, scale);
    }
    return value;
  }

  const auto adjusted = attribution::residual_adjusted(attribution::head_means(maps));
  if (method == DebiasMethod::kAttnRollout) {
    const Matrix r = attribution::rollout_matrix(adjusted);
    const double value = w.dot(r * u);
    if (!grads.empty()) {
      // value = w^T A_L ... A_1 u; d/dA_l = (w^T A_L..A_{l+1})^T (A_{l-1}..A_1 u)^T.
      std::vector<Vector> right(layers);
      Vector rv = u;
      for (std::size_t l = 0; l < layers; ++l) {
        right[l] = rv;
        rv = adjusted[l] * rv;
      }
      std::vector<Matrix> d(layers);
      Vector left = w;
      for (std::size_t l = layers; l-- > 0;) {
        d[l] = left * right[l].transpose();
        left = adjusted[l].transpose() * left;
      }
      backprop_attention(model, ex, cache, from_adjusted(d, cache), grads, scale);
    }
    return value;
  }

  // Attention flow: gradients through the minimum cut of every target.
  const auto flow = attribution::attention_flow(adjusted, Aggregation::kMeanPool, !grads.empty());
  const double value = flow.scores.dot(u);
  if (!grads.empty()) {
    const double total = flow.raw_flow.sum();
    std::vector<Matrix> d(layers, Matrix::Zero(n, n));
    for (Eigen::Index k = 0; k < n; ++k) {
      const double dk = (u(k) - value) / total;
      if (dk == 0.0) continue;
      for (std::size_t l = 0; l < layers; ++l) d[l] += dk * flow.cuts[static_cast<std::size_t>(k)][l];
    }
    backprop_attention(model, ex, cache, from_adjusted(d, cache), grads, scale);
  }
  return value;
}

double occlusion_simplified(const ReferenceModel& model, const EncodedExample& ex,
                            const ForwardCache& cache, std::span<double> grads, double scale) {
  auto masked_ids = ex.ids;
  const int mask = model.token_id(model::kMaskToken);
  for (int j : ex.sensitive) masked_ids[static_cast<std::size_t>(j)] = mask;
  const auto masked = model.forward(model.lookup(masked_ids), cache.masks);
  const double diff = cache.probs.toxic - masked.probs.toxic;
  if (!grads.empty() && diff != 0.0) {
    const double s = diff > 0 ? scale : -scale;
    auto [dt, dn] = model::probability_logit_grad(cache.probs, Label::kToxic);
    Matrix dx = model.backward(cache, BackwardSeed{s * dt, s * dn}, grads);
    model.scatter_embedding_grad(ex.ids, dx, grads);
    auto [mt, mn] = model::probability_logit_grad(masked.probs, Label::kToxic);
    Matrix mdx = model.backward(masked, BackwardSeed{-s * mt, -s * mn}, grads);
    model.scatter_embedding_grad(masked_ids, mdx, grads);
  }
  return std::abs(diff);
}

double entropy_term(const ReferenceModel& model, const EncodedExample& ex,
                    const ForwardCache& cache, std::span<double> grads, double scale) {
  const auto maps = cache_maps(cache);
  const double h = mean_attention_entropy(maps);
  if (!grads.empty()) {
    std::size_t rows = 0;
    for (const auto& layer : maps) {
      for (const auto& a : layer) rows += static_cast<std::size_t>(a.rows());
    }
    // d(-mean H)/dp = (log p + 1) / rows.
    AttentionMaps d = maps;
    for (auto& layer : d) {
      for (auto& a : layer) {
        a = a.unaryExpr([rows](double p) {
          return (std::log(std::max(p, 1e-300)) + 1.0) / static_cast<double>(rows);
        });
      }
    }
    backprop_attention(model, ex, cache, d, grads, scale);
  }
  return -h;
}

}  // namespace

const std::vector<DebiasMethod>& trainable_methods() {
  static const std::vector<DebiasMethod> methods = [] {
    std::vector<DebiasMethod> out;
    for (const auto& [m, _] : kNames) out.push_back(m);
    return out;
  }();
  return methods;
}

std::string_view to_string(DebiasMethod m) {
  for (const auto& [method, name] : kNames) {
    if (method == m) return name;
  }
  return "unknown";
}

DebiasMethod debias_method_from_string(std::string_view name) {
  for (const auto& [method, n] : kNames) {
    if (n == name) return method;
  }
  if (name.starts_with("deeplift") || name.starts_with("intgrad") || name == "kernelshap") {
    throw ConfigError(std::string(name) + " is excluded from explanation-regularized training");
  }
  throw ConfigError("unknown debiasing method: " + std::string(name));
}

double penalty(const ReferenceModel& model, const EncodedExample& ex, const ForwardCache& cache,
               DebiasMethod method, std::span<double> grads, double scale, double fd_step) {
  if (method == DebiasMethod::kAttentionEntropy) return entropy_term(model, ex, cache, grads, scale);
  if (ex.sensitive.empty()) return 0.0;
  switch (method) {
    case DebiasMethod::kGradL1:
    case DebiasMethod::kGradL2:
    case DebiasMethod::kIxgL1:
    case DebiasMethod::kIxgL2:
      return gradient_family(model, ex, cache, method, grads, scale, fd_step);
    case DebiasMethod::kOcclusionSimplified:
      return occlusion_simplified(model, ex, cache, grads, scale);
    default:
      return attention_family(model, ex, cache, method, grads, scale);
  }
}

double debias_loss(const ReferenceModel& model, const std::vector<corpus::Example>& batch,
                   DebiasMethod method) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : batch) {
    const auto ex = model::encode_example(model, e);
    total += penalty(model, ex, model.forward(model.lookup(ex.ids)), method);
  }
  return total / static_cast<double>(batch.size());
}

model::RegularizerHook make_regularizer(DebiasMethod method, double alpha) {
  if (alpha < 0) throw ConfigError("alpha must be non-negative");
  return [method, alpha](const ReferenceModel& model, const EncodedExample& ex,
                         const ForwardCache& cache, std::span<double> grads) {
    if (alpha == 0.0) return 0.0;
    return alpha * penalty(model, ex, cache, method, grads, alpha);
  };
}

double row_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0) h -= v * std::log(v);
  }
  return h;
}

double mean_attention_entropy(const AttentionMaps& maps) {
  double total = 0.0;
  std::size_t rows = 0;
  for (const auto& layer : maps) {
    for (const auto& a : layer) {
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        total += row_entropy(std::span<const double>(a.row(r).data(), static_cast<std::size_t>(a.cols())));
        ++rows;
      }
    }
  }
  return rows ? total / static_cast<double>(rows) : 0.0;
}

double attention_entropy_regularizer(const ReferenceModel& model,
                                     const std::vector<corpus::Example>& batch, double weight) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : batch) total += mean_attention_entropy(model.attentions(model::model_input(model, e)));
  return -weight * total / static_cast<double>(batch.size());
}

}  // namespace fairlens::debias
