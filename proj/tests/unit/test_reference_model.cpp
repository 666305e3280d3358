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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace fairlens::model {
namespace {

using testing::small_model;
using testing::words;

double relative_error(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

TEST(ReferenceModel, ZeroedHeadPredictsHalf) {
  auto m = small_model(1);
  m.zero_head();
  auto p = m.predict_proba(words("black people are kind"));
  EXPECT_DOUBLE_EQ(p.toxic, 0.5);
  EXPECT_DOUBLE_EQ(p.non_toxic, 0.5);
}

TEST(ReferenceModel, ProbabilitiesSumToOne) {
  auto m = small_model(2);
  for (const char* text : {"she", "the black people are stupid idiots", "unknown words here"}) {
    auto p = m.predict_proba(words(text));
    EXPECT_NEAR(p.toxic + p.non_toxic, 1.0, 1e-6);
  }
}

TEST(ReferenceModel, UnknownTokensMapToUnk) {
  auto m = small_model(3);
  EXPECT_EQ(m.token_id("zzzz"), 1);
  EXPECT_EQ(m.token_id("[MASK]"), 2);
}

TEST(ReferenceModel, AttentionRowsAreStochastic) {
  auto m = small_model(4);
  auto maps = m.attentions(words("the white people are kind"));
  ASSERT_EQ(maps.size(), 2u);
  for (const auto& layer : maps) {
    ASSERT_EQ(layer.size(), 4u);
    for (const auto& a : layer) {
      for (Eigen::Index r = 0; r < a.rows(); ++r) EXPECT_NEAR(a.row(r).sum(), 1.0, 1e-5);
      EXPECT_GE(a.minCoeff(), 0.0);
    }
  }
}

// Central finite differences on every embedding coordinate, h = 1e-3.
TEST(ReferenceModel, EmbeddingGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    auto m = small_model(seed);
    Matrix x = m.embeddings(words("she is a stupid doctor"));
    for (Label c : {Label::kToxic, Label::kNonToxic}) {
      Matrix g = m.gradients_of(c, x);
      Matrix fd(x.rows(), x.cols());
      const double h = 1e-3;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        Matrix xp = x, xm = x;
        xp.data()[i] += h;
        xm.data()[i] -= h;
        fd.data()[i] = (m.predict_from_embeddings(xp)[c] - m.predict_from_embeddings(xm)[c]) / (2 * h);
      }
      EXPECT_LE(relative_error(g, fd), 1e-3) << "seed " << seed;
    }
  }
}

// Cross-entropy gradient with respect to a sample of parameters.
TEST(ReferenceModel, ParameterGradientMatchesFiniteDifferences) {
  auto m = small_model(8);
  const auto ids = m.encode(words("the black people are kind"));
  auto loss = [&](const ReferenceModel& model) {
    return -std::log(model.forward(model.lookup(ids)).probs.toxic);
  };
  std::vector<double> grads(m.num_parameters(), 0.0);
  auto cache = m.forward(m.lookup(ids));
  // d(-log p_toxic)/dz = p - onehot(toxic)
  BackwardSeed seed{cache.probs.toxic - 1.0, cache.probs.non_toxic};
  Matrix dx = m.backward(cache, seed, grads);
  m.scatter_embedding_grad(ids, dx, grads);

  std::mt19937_64 rng(11);
  const double h = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto i = rng() % m.num_parameters();
    auto mp = m, mm = m;
    mp.parameters()[i] += h;
    mm.parameters()[i] -= h;
    const double fd = (loss(mp) - loss(mm)) / (2 * h);
    if (std::abs(fd) < 1e-7 && std::abs(grads[i]) < 1e-7) continue;
    EXPECT_NEAR(grads[i], fd, 1e-6 + 1e-4 * std::abs(fd)) << "param " << i;
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

// An extra gradient injected on the attention maps must match the finite
// difference of sum(W .* A) with respect to the embeddings.
TEST(ReferenceModel, AttentionSeedBackpropagates) {
  auto m = small_model(9);
  Matrix x = m.embeddings(words("white people are lovely"));
  const auto n = x.rows();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  AttentionMaps w(2, std::vector<Matrix>(4, Matrix(n, n)));
  for (auto& layer : w) {
    for (auto& a : layer) a = a.unaryExpr([&](double) { return normal(rng); });
  }
  auto objective = [&](const Matrix& input) {
    auto c = m.forward(input);
    double s = 0;
    for (std::size_t l = 0; l < 2; ++l) {
      for (std::size_t h = 0; h < 4; ++h) s += (w[l][h].array() * c.layers[l].attn[h].array()).sum();
    }
    return s;
  };
  auto cache = m.forward(x);
  Matrix g = m.backward(cache, BackwardSeed{0.0, 0.0, &w, nullptr}, {});
  Matrix fd(n, x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Matrix xp = x, xm = x;
    xp.data()[i] += 1e-5;
    xm.data()[i] -= 1e-5;
    fd.data()[i] = (objective(xp) - objective(xm)) / 2e-5;
  }
  EXPECT_LE(relative_error(g, fd), 1e-5);
}

TEST(ReferenceModel, DeepLiftAtBaselineEqualsGradient) {
  auto m = small_model(10);
  Matrix x = m.embeddings(words("he is kind"));
  Matrix dl = m.deeplift_multipliers(Label::kToxic, x, x);
  Matrix g = m.gradients_of(Label::kToxic, x);
  EXPECT_LE(relative_error(dl, g), 1e-9);
}

TEST(ReferenceModel, DigestTracksParameters) {
  auto a = small_model(12);
  auto b = a;
  EXPECT_EQ(a.digest(), b.digest());
  b.parameters()[0] += 1e-9;
  EXPECT_NE(a.digest(), b.digest());
}

TEST(ReferenceModel, RejectsOverlongInput) {
  auto m = small_model(13);
  std::vector<std::string> tokens(17, "the");
  EXPECT_THROW(m.predict_proba(tokens), ConfigError);
}

}  // namespace
}  // namespace fairlens::model
