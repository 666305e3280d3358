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

#include "fairlens/model/reference_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "fairlens/digest.hpp"

namespace fairlens::model {
namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;
using MutRowMap = Eigen::Map<Eigen::RowVectorXd>;

constexpr double kInvSqrt2 = 0.70710678118654752440;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = std::exp(-0.5 * x * x) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  return cdf + x * pdf;
}

// Row-wise layer norm; fills xhat and rstd for the backward pass.
Matrix layer_norm(const Matrix& x, ConstRowMap gamma, ConstRowMap beta, double eps, Matrix& xhat,
                  Vector& rstd) {
  const auto n = x.rows();
  const double d = static_cast<double>(x.cols());
  xhat.resize(n, x.cols());
  rstd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.row(i).sum() / d;
    const double var = (x.row(i).array() - mean).square().sum() / d;
    rstd(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (x.row(i).array() - mean) * rstd(i);
  }
  Matrix y = xhat.array().rowwise() * gamma.array();
  y.rowwise() += beta;
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Vector& rstd,
                           ConstRowMap gamma, double* d_gamma, double* d_beta) {
  const auto n = dy.rows();
  const auto dim = dy.cols();
  if (d_gamma) {
    MutRowMap(d_gamma, dim) += (dy.array() * xhat.array()).colwise().sum().matrix();
    MutRowMap(d_beta, dim) += dy.colwise().sum();
  }
  Matrix dxhat = dy.array().rowwise() * gamma.array();
  Matrix dx(n, dim);
  const double inv_d = 1.0 / static_cast<double>(dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean_dxhat = dxhat.row(i).sum() * inv_d;
    const double mean_dxhat_xhat = dxhat.row(i).dot(xhat.row(i)) * inv_d;
    dx.row(i) = rstd(i) * (dxhat.row(i).array() - mean_dxhat - xhat.row(i).array() * mean_dxhat_xhat);
  }
  return dx;
}

void softmax_rows(Matrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp();
    s.row(i) /= s.row(i).sum();
  }
}

}  // namespace

ParamLayout::ParamLayout(const ReferenceConfig& c, std::size_t vocab_size) {
  const auto d = static_cast<std::size_t>(c.dim);
  const auto f = static_cast<std::size_t>(c.ff_dim);
  std::size_t off = 0;
  auto take = [&](std::size_t n) {
    const auto at = off;
    off += n;
    return at;
  };
  tok_emb = take(vocab_size * d);
  pos_emb = take(static_cast<std::size_t>(c.max_length) * d);
  for (int l = 0; l < c.layers; ++l) {
    Layer L{};
    L.ln1_g = take(d);
    L.ln1_b = take(d);
    L.wq = take(d * d);
    L.bq = take(d);
    L.wk = take(d * d);
    L.bk = take(d);
    L.wv = take(d * d);
    L.bv = take(d);
    L.wo = take(d * d);
    L.bo = take(d);
    L.ln2_g = take(d);
    L.ln2_b = take(d);
    L.w1 = take(d * f);
    L.b1 = take(f);
    L.w2 = take(f * d);
    L.b2 = take(d);
    layers.push_back(L);
  }
  lnf_g = take(d);
  lnf_b = take(d);
  wc = take(d * 2);
  bc = take(2);
  total = off;
}

std::pair<double, double> probability_logit_grad(const Probabilities& p, Label c) {
  const double s = p.toxic * p.non_toxic;
  return c == Label::kToxic ? std::pair{s, -s} : std::pair{-s, s};
}

ReferenceModel::ReferenceModel(std::vector<std::string> vocab, const ReferenceConfig& config)
    : config_(config), vocab_(std::move(vocab)) {
  if (config_.dim % config_.heads != 0) throw ConfigError("dim must be divisible by heads");
  for (std::size_t i = 0; i < vocab_.size(); ++i) index_[vocab_[i]] = static_cast<int>(i);
  layout_ = ParamLayout(config_, vocab_.size());
  params_.assign(layout_.total, 0.0);
}

ReferenceModel ReferenceModel::create(const std::vector<std::string>& vocabulary,
                                      const ReferenceConfig& config, std::uint64_t seed) {
  std::vector<std::string> vocab{kPadToken, kUnkToken, kMaskToken};
  for (const auto& t : vocabulary) {
    if (std::find(vocab.begin(), vocab.end(), t) == vocab.end()) vocab.push_back(t);
  }
  ReferenceModel m(std::move(vocab), config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, config.init_std);
  for (auto& p : m.params_) p = normal(rng);
  const auto d = static_cast<std::size_t>(config.dim);
  auto fill = [&](std::size_t off, std::size_t n, double v) {
    std::fill_n(m.params_.begin() + static_cast<std::ptrdiff_t>(off), n, v);
  };
  for (const auto& L : m.layout_.layers) {
    fill(L.ln1_g, d, 1.0);
    fill(L.ln1_b, d, 0.0);
    fill(L.ln2_g, d, 1.0);
    fill(L.ln2_b, d, 0.0);
    fill(L.bq, d, 0.0);
    fill(L.bk, d, 0.0);
    fill(L.bv, d, 0.0);
    fill(L.bo, d, 0.0);
    fill(L.b1, static_cast<std::size_t>(config.ff_dim), 0.0);
    fill(L.b2, d, 0.0);
  }
  fill(m.layout_.lnf_g, d, 1.0);
  fill(m.layout_.lnf_b, d, 0.0);
  fill(m.layout_.bc, 2, 0.0);
  return m;
}

ReferenceModel ReferenceModel::from_parameters(std::vector<std::string> vocabulary,
                                               const ReferenceConfig& config,
                                               std::vector<double> params) {
  if (vocabulary.size() < 3 || vocabulary[0] != kPadToken || vocabulary[1] != kUnkToken ||
      vocabulary[2] != kMaskToken) {
    throw DataError("reference vocabulary must start with [PAD], [UNK], [MASK]");
  }
  ReferenceModel m(std::move(vocabulary), config);
  if (params.size() != m.params_.size()) {
    throw DataError("parameter count " + std::to_string(params.size()) + " does not match " +
                    std::to_string(m.params_.size()));
  }
  m.params_ = std::move(params);
  return m;
}

std::vector<std::string> ReferenceModel::build_vocabulary(
    const std::vector<corpus::Example>& examples, const std::vector<std::string>& extra_tokens) {
  std::set<std::string> all(extra_tokens.begin(), extra_tokens.end());
  for (const auto& e : examples) all.insert(e.tokens.begin(), e.tokens.end());
  return {all.begin(), all.end()};
}

Capabilities ReferenceModel::capabilities() const {
  return Capabilities{true, true, true, kMaskToken, kPadToken};
}

std::string ReferenceModel::digest() const {
  DigestBuilder b;
  b.add("reference")
      .add(std::int64_t{config_.dim})
      .add(std::int64_t{config_.heads})
      .add(std::int64_t{config_.layers})
      .add(std::int64_t{config_.ff_dim})
      .add(std::int64_t{config_.max_length});
  for (const auto& t : vocab_) b.add(t);
  b.add(std::span<const double>(params_));
  return b.finish();
}

int ReferenceModel::token_id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 1 : it->second;
}

std::vector<int> ReferenceModel::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(token_id(t));
  return ids;
}

Matrix ReferenceModel::lookup(std::span<const int> ids) const {
  const int d = config_.dim;
  ConstMap table(params_.data() + layout_.tok_emb, static_cast<Eigen::Index>(vocab_.size()), d);
  Matrix x(static_cast<Eigen::Index>(ids.size()), d);
  for (std::size_t i = 0; i < ids.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = table.row(ids[i]);
  return x;
}

ForwardCache ReferenceModel::forward(const Matrix& x, const DropoutMasks* masks) const {
  const int d = config_.dim;
  const int nh = config_.heads;
  const int dh = d / nh;
  const int ff = config_.ff_dim;
  const auto n = x.rows();
  if (n == 0) throw ConfigError("empty input");
  if (n > config_.max_length) throw ConfigError("input longer than max_length");
  if (x.cols() != d) throw ConfigError("embedding width mismatch");
  const double* P = params_.data();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardCache c;
  c.masks = masks;
  c.input = x;
  Matrix h = x + ConstMap(P + layout_.pos_emb, config_.max_length, d).topRows(n);
  c.layers.resize(static_cast<std::size_t>(config_.layers));
  for (int l = 0; l < config_.layers; ++l) {
    const auto& L = layout_.layers[static_cast<std::size_t>(l)];
    auto& lc = c.layers[static_cast<std::size_t>(l)];
    lc.h_in = h;
    lc.u1 = layer_norm(h, ConstRowMap(P + L.ln1_g, d), ConstRowMap(P + L.ln1_b, d),
                       config_.layer_norm_eps, lc.xhat1, lc.rstd1);
    lc.q = lc.u1 * ConstMap(P + L.wq, d, d);
    lc.q.rowwise() += ConstRowMap(P + L.bq, d);
    lc.k = lc.u1 * ConstMap(P + L.wk, d, d);
    lc.k.rowwise() += ConstRowMap(P + L.bk, d);
    lc.v = lc.u1 * ConstMap(P + L.wv, d, d);
    lc.v.rowwise() += ConstRowMap(P + L.bv, d);
    lc.o.resize(n, d);
    lc.attn.resize(static_cast<std::size_t>(nh));
    for (int hd = 0; hd < nh; ++hd) {
      Matrix s = lc.q.middleCols(hd * dh, dh) * lc.k.middleCols(hd * dh, dh).transpose() * scale;
      softmax_rows(s);
      lc.o.middleCols(hd * dh, dh) = s * lc.v.middleCols(hd * dh, dh);
      lc.attn[static_cast<std::size_t>(hd)] = std::move(s);
    }
    lc.attn_out = lc.o * ConstMap(P + L.wo, d, d);
    lc.attn_out.rowwise() += ConstRowMap(P + L.bo, d);
    if (masks) {
      h += lc.attn_out.cwiseProduct(masks->attention[static_cast<std::size_t>(l)]);
    } else {
      h += lc.attn_out;
    }
    lc.h_mid = h;
    lc.u2 = layer_norm(h, ConstRowMap(P + L.ln2_g, d), ConstRowMap(P + L.ln2_b, d),
                       config_.layer_norm_eps, lc.xhat2, lc.rstd2);
    lc.z = lc.u2 * ConstMap(P + L.w1, d, ff);
    lc.z.rowwise() += ConstRowMap(P + L.b1, ff);
    lc.g = lc.z.unaryExpr([](double v) { return gelu(v); });
    lc.f = lc.g * ConstMap(P + L.w2, ff, d);
    lc.f.rowwise() += ConstRowMap(P + L.b2, d);
    if (masks) {
      h += lc.f.cwiseProduct(masks->feed_forward[static_cast<std::size_t>(l)]);
    } else {
      h += lc.f;
    }
  }
  c.h_last = h;
  c.hf = layer_norm(h, ConstRowMap(P + layout_.lnf_g, d), ConstRowMap(P + layout_.lnf_b, d),
                    config_.layer_norm_eps, c.xhat_f, c.rstd_f);
  c.pooled = c.hf.colwise().mean();
  Eigen::RowVector2d logits = c.pooled * ConstMap(P + layout_.wc, d, 2);
  logits += ConstRowMap(P + layout_.bc, 2);
  c.logit_toxic = logits(0);
  c.logit_non_toxic = logits(1);
  c.probs = softmax2(logits(0), logits(1));
  return c;
}

Matrix ReferenceModel::backward(const ForwardCache& c, const BackwardSeed& seed,
                                std::span<double> grads) const {
  const int d = config_.dim;
  const int nh = config_.heads;
  const int dh = d / nh;
  const int ff = config_.ff_dim;
  const auto n = c.input.rows();
  const double* P = params_.data();
  const bool acc = !grads.empty();
  if (acc && grads.size() != params_.size()) throw ConfigError("gradient buffer size mismatch");
  double* G = acc ? grads.data() : nullptr;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const ForwardCache* base = seed.deeplift_baseline;

  Eigen::RowVector2d dlogits(seed.d_logit_toxic, seed.d_logit_non_toxic);
  if (acc) {
    MutMap(G + layout_.wc, d, 2) += c.pooled.transpose() * dlogits;
    MutRowMap(G + layout_.bc, 2) += dlogits;
  }
  Eigen::RowVectorXd dpooled = dlogits * ConstMap(P + layout_.wc, d, 2).transpose();
  Matrix dhf = dpooled.replicate(n, 1) / static_cast<double>(n);
  Matrix dh_ = layer_norm_backward(dhf, c.xhat_f, c.rstd_f, ConstRowMap(P + layout_.lnf_g, d),
                                   acc ? G + layout_.lnf_g : nullptr,
                                   acc ? G + layout_.lnf_b : nullptr);

  for (int l = config_.layers - 1; l >= 0; --l) {
    const auto& L = layout_.layers[static_cast<std::size_t>(l)];
    const auto& lc = c.layers[static_cast<std::size_t>(l)];

    // Feed-forward branch.
    Matrix df = c.masks ? Matrix(dh_.cwiseProduct(c.masks->feed_forward[static_cast<std::size_t>(l)]))
                        : dh_;
    if (acc) {
      MutMap(G + L.w2, ff, d) += lc.g.transpose() * df;
      MutRowMap(G + L.b2, d) += df.colwise().sum();
    }
    Matrix dz = df * ConstMap(P + L.w2, ff, d).transpose();
    if (base) {
      const auto& bz = base->layers[static_cast<std::size_t>(l)].z;
      for (Eigen::Index i = 0; i < dz.rows(); ++i) {
        for (Eigen::Index j = 0; j < dz.cols(); ++j) {
          const double z = lc.z(i, j);
          const double z0 = bz(i, j);
          const double m =
              std::abs(z - z0) > 1e-7 ? (gelu(z) - gelu(z0)) / (z - z0) : gelu_grad(z);
          dz(i, j) *= m;
        }
      }
    } else {
      dz.array() *= lc.z.unaryExpr([](double v) { return gelu_grad(v); }).array();
    }
    if (acc) {
      MutMap(G + L.w1, d, ff) += lc.u2.transpose() * dz;
      MutRowMap(G + L.b1, ff) += dz.colwise().sum();
    }
    Matrix du2 = dz * ConstMap(P + L.w1, d, ff).transpose();
    dh_ += layer_norm_backward(du2, lc.xhat2, lc.rstd2, ConstRowMap(P + L.ln2_g, d),
                               acc ? G + L.ln2_g : nullptr, acc ? G + L.ln2_b : nullptr);

    // Attention branch.
    Matrix dao = c.masks ? Matrix(dh_.cwiseProduct(c.masks->attention[static_cast<std::size_t>(l)]))
                         : dh_;
    if (acc) {
      MutMap(G + L.wo, d, d) += lc.o.transpose() * dao;
      MutRowMap(G + L.bo, d) += dao.colwise().sum();
    }
    Matrix d_o = dao * ConstMap(P + L.wo, d, d).transpose();
    Matrix dq(n, d), dk(n, d), dv(n, d);
    for (int hd = 0; hd < nh; ++hd) {
      const auto& a = lc.attn[static_cast<std::size_t>(hd)];
      auto doh = d_o.middleCols(hd * dh, dh);
      Matrix da = doh * lc.v.middleCols(hd * dh, dh).transpose();
      if (seed.d_attention) {
        da += (*seed.d_attention)[static_cast<std::size_t>(l)][static_cast<std::size_t>(hd)];
      }
      dv.middleCols(hd * dh, dh) = a.transpose() * doh;
      Vector row_dot = (da.array() * a.array()).rowwise().sum();
      Matrix ds = a.array() * (da.array().colwise() - row_dot.array());
      dq.middleCols(hd * dh, dh) = ds * lc.k.middleCols(hd * dh, dh) * scale;
      dk.middleCols(hd * dh, dh) = ds.transpose() * lc.q.middleCols(hd * dh, dh) * scale;
    }
    if (acc) {
      MutMap(G + L.wq, d, d) += lc.u1.transpose() * dq;
      MutRowMap(G + L.bq, d) += dq.colwise().sum();
      MutMap(G + L.wk, d, d) += lc.u1.transpose() * dk;
      MutRowMap(G + L.bk, d) += dk.colwise().sum();
      MutMap(G + L.wv, d, d) += lc.u1.transpose() * dv;
      MutRowMap(G + L.bv, d) += dv.colwise().sum();
    }
    Matrix du1 = dq * ConstMap(P + L.wq, d, d).transpose() +
                 dk * ConstMap(P + L.wk, d, d).transpose() +
                 dv * ConstMap(P + L.wv, d, d).transpose();
    dh_ += layer_norm_backward(du1, lc.xhat1, lc.rstd1, ConstRowMap(P + L.ln1_g, d),
                               acc ? G + L.ln1_g : nullptr, acc ? G + L.ln1_b : nullptr);
  }
  if (acc) MutMap(G + layout_.pos_emb, config_.max_length, d).topRows(n) += dh_;
  return dh_;
}

void ReferenceModel::scatter_embedding_grad(std::span<const int> ids, const Matrix& d_embeddings,
                                            std::span<double> grads) const {
  MutMap table(grads.data() + layout_.tok_emb, static_cast<Eigen::Index>(vocab_.size()), config_.dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    table.row(ids[i]) += d_embeddings.row(static_cast<Eigen::Index>(i));
  }
}

DropoutMasks ReferenceModel::sample_dropout(int n, double p, std::mt19937_64& rng) const {
  DropoutMasks m;
  const double keep = 1.0 / (1.0 - p);
  auto draw = [&] {
    Matrix mask(n, config_.dim);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = uniform_unit(rng) < p ? 0.0 : keep;
    return mask;
  };
  for (int l = 0; l < config_.layers; ++l) {
    m.attention.push_back(draw());
    m.feed_forward.push_back(draw());
  }
  return m;
}

Probabilities ReferenceModel::predict_proba(std::span<const std::string> tokens) const {
  return forward(lookup(encode(tokens))).probs;
}

Matrix ReferenceModel::embeddings(std::span<const std::string> tokens) const {
  return lookup(encode(tokens));
}

Probabilities ReferenceModel::predict_from_embeddings(const Matrix& embeddings) const {
  return forward(embeddings).probs;
}

Matrix ReferenceModel::gradients_of(Label c, const Matrix& embeddings) const {
  auto cache = forward(embeddings);
  auto [dt, dn] = probability_logit_grad(cache.probs, c);
  return backward(cache, BackwardSeed{dt, dn}, {});
}

AttentionMaps ReferenceModel::attentions(std::span<const std::string> tokens) const {
  auto cache = forward(lookup(encode(tokens)));
  AttentionMaps out;
  for (auto& lc : cache.layers) out.push_back(std::move(lc.attn));
  return out;
}

Matrix ReferenceModel::deeplift_multipliers(Label c, const Matrix& embeddings,
                                            const Matrix& baseline) const {
  auto cache = forward(embeddings);
  auto base = forward(baseline);
  // Rescale rule on the output: f_c = sigmoid(+-(z_toxic - z_nontoxic)).
  const double diff = cache.logit_toxic - cache.logit_non_toxic;
  const double diff0 = base.logit_toxic - base.logit_non_toxic;
  const double sign = c == Label::kToxic ? 1.0 : -1.0;
  double m;
  if (std::abs(diff - diff0) > 1e-9) {
    m = (cache.probs[c] - base.probs[c]) / (sign * (diff - diff0));
  } else {
    m = cache.probs.toxic * cache.probs.non_toxic;
  }
  BackwardSeed seed{sign * m, -sign * m, nullptr, &base};
  return backward(cache, seed, {});
}

void ReferenceModel::zero_head() {
  std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(layout_.wc), 2 * config_.dim + 2, 0.0);
}

}  // namespace fairlens::model
