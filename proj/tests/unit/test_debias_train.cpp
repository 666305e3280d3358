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

#include "fairlens/debias/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <gtest/gtest.h>

#include "fairlens/corpus/planted.hpp"
#include "fairlens/model/checkpoint.hpp"

namespace fairlens::debias {
namespace {

struct Fixture {
  std::vector<corpus::Example> train;
  std::vector<corpus::Example> validation;
  corpus::GroupVocabulary vocab = corpus::planted_vocabulary();
  ModelFactory factory;

  Fixture() {
    train = corpus::generate_planted(48, {}, 1, "t");
    corpus::PlantedConfig even;
    even.plant_rate = 0.5;
    validation = corpus::generate_planted(24, even, 2, "v");
    auto vocabulary = model::ReferenceModel::build_vocabulary(train);
    for (auto& w : model::ReferenceModel::build_vocabulary(validation)) vocabulary.push_back(w);
    std::sort(vocabulary.begin(), vocabulary.end());
    vocabulary.erase(std::unique(vocabulary.begin(), vocabulary.end()), vocabulary.end());
    model::ReferenceConfig rc;
    rc.dim = 16;
    rc.heads = 2;
    rc.layers = 1;
    rc.ff_dim = 32;
    rc.max_length = 16;
    factory = [vocabulary, rc](std::uint64_t seed) {
      return model::ReferenceModel::create(vocabulary, rc, seed);
    };
  }

  DebiasConfig config(DebiasMethod method, std::vector<double> alphas) const {
    DebiasConfig c;
    c.method = method;
    c.alpha_grid = std::move(alphas);
    c.seeds = {0, 1};
    c.fine_tune.epochs = 2;
    c.fine_tune.batch_size = 8;
    c.fine_tune.learning_rate = 1e-2;
    return c;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

TEST(HarmonicMetric, HandValues) {
  EXPECT_DOUBLE_EQ(harmonic_metric(80, 20), 80.0);
  EXPECT_NEAR(harmonic_metric(100, 50), 200.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(harmonic_metric(0, 100), 0.0);
  EXPECT_DOUBLE_EQ(harmonic_metric(0, 150), 0.0);
  EXPECT_DOUBLE_EQ(harmonic_metric(50, -10), harmonic_metric(50, 0));
  EXPECT_DOUBLE_EQ(harmonic_metric(50, 130), 0.0);
}

TEST(HarmonicMetric, StaysInPercentRange) {
  for (double a = 0; a <= 100; a += 12.5) {
    for (double u = -20; u <= 140; u += 10) {
      const double h = harmonic_metric(a, u);
      EXPECT_GE(h, 0.0);
      EXPECT_LE(h, 100.0);
      EXPECT_LE(h, std::max(a, 100.0 - std::clamp(u, 0.0, 100.0)) + 1e-12);
    }
  }
}

TEST(HarmonicMetric, UndefinedDisparityIsMaximal) {
  fairness::FairnessReport r;
  r.disp_acc = 3;
  r.avg_iu = 4;
  EXPECT_DOUBLE_EQ(unfairness_of(r, SelectionMetric::kDispFpr), 100.0);
  EXPECT_DOUBLE_EQ(unfairness_of(r, SelectionMetric::kDispAcc), 3.0);
  EXPECT_DOUBLE_EQ(unfairness_of(r, SelectionMetric::kAvgIu), 4.0);
  for (auto m : all_selection_metrics()) EXPECT_EQ(selection_metric_from_string(to_string(m)), m);
  EXPECT_THROW(selection_metric_from_string("nope"), ConfigError);
}

TEST(TrainDebiased, RejectsBadGrids) {
  const auto& f = fixture();
  EXPECT_THROW(train_debiased(f.factory, f.train, f.validation, f.vocab,
                              f.config(DebiasMethod::kAttention, {-1.0})),
               ConfigError);
  EXPECT_THROW(train_debiased(f.factory, f.train, f.validation, f.vocab,
                              f.config(DebiasMethod::kAttention, {})),
               ConfigError);
}

TEST(TrainDebiased, ZeroAlphaIgnoresThePenalty) {
  const auto& f = fixture();
  auto a = train_debiased(f.factory, f.train, f.validation, f.vocab,
                          f.config(DebiasMethod::kAttention, {0.0}));
  auto b = train_debiased(f.factory, f.train, f.validation, f.vocab,
                          f.config(DebiasMethod::kIxgL2, {0.0}));
  ASSERT_EQ(a.trajectory.size(), 4u);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    EXPECT_EQ(a.trajectory[i].model_digest, b.trajectory[i].model_digest);
  }
}

TEST(TrainDebiased, SelectionFollowsTrajectory) {
  const auto& f = fixture();
  auto run = train_debiased(f.factory, f.train, f.validation, f.vocab,
                            f.config(DebiasMethod::kAttention, {0.0, 1.0, 10.0}));
  ASSERT_EQ(run.trajectory.size(), 2u * 3u * 2u);
  ASSERT_EQ(run.candidates.size(), 3u * 4u);
  // Oracle: per (alpha, metric), the mean over seeds of the best epoch score.
  for (std::size_t mi = 0; mi < run.config.metrics.size(); ++mi) {
    const auto metric = run.config.metrics[mi];
    double best_score = -1;
    double best_alpha = -1;
    for (double alpha : run.config.alpha_grid) {
      std::map<std::uint64_t, double> per_seed;
      for (const auto& r : run.trajectory) {
        if (r.alpha != alpha) continue;
        const double h = harmonic_metric(r.accuracy, unfairness_of(
            [&] {
              fairness::FairnessReport rep;
              rep.disp_acc = r.disp_acc;
              rep.disp_fpr = r.disp_fpr;
              rep.disp_fnr = r.disp_fnr;
              rep.avg_iu = r.avg_iu;
              return rep;
            }(), metric));
        EXPECT_DOUBLE_EQ(h, r.harmonic[mi]);
        per_seed[r.seed] = std::max(per_seed.count(r.seed) ? per_seed[r.seed] : -1.0, h);
      }
      double mean = 0;
      for (auto& [_, v] : per_seed) mean += v;
      mean /= static_cast<double>(per_seed.size());
      const auto& cand = run.candidate(alpha, metric);
      EXPECT_NEAR(cand.score, mean, 1e-12);
      ASSERT_EQ(cand.models.size(), 2u);
      for (std::size_t s = 0; s < 2; ++s) {
        // The kept model is the one evaluated at the chosen epoch.
        auto it = std::find_if(run.trajectory.begin(), run.trajectory.end(), [&](const EpochRecord& r) {
          return r.alpha == alpha && r.seed == run.config.seeds[s] && r.epoch == cand.epochs[s];
        });
        ASSERT_NE(it, run.trajectory.end());
        EXPECT_EQ(it->model_digest, cand.models[s].digest());
      }
      if (mean > best_score) {
        best_score = mean;
        best_alpha = alpha;
      }
    }
    EXPECT_EQ(run.selected(metric).alpha, best_alpha);
  }
}

TEST(TrainDebiased, AllDivergedIsAnError) {
  const auto& f = fixture();
  auto c = f.config(DebiasMethod::kGradL2, {1.0});
  c.fine_tune.learning_rate = 1e300;
  c.fine_tune.warmup_fraction = 0.0;
  c.fine_tune.weight_decay = 0.0;
  EXPECT_THROW(train_debiased(f.factory, f.train, f.validation, f.vocab, c), NumericalError);
}

TEST(TrainDebiased, SavedRunReloads) {
  const auto& f = fixture();
  auto c = f.config(DebiasMethod::kIxgL2, {0.1});
  c.fine_tune.epochs = 1;
  c.metrics = {SelectionMetric::kAvgIu};
  auto run = train_debiased(f.factory, f.train, f.validation, f.vocab, c);
  const auto root = std::filesystem::temp_directory_path() / "fairlens_debias_run";
  std::filesystem::remove_all(root);
  save_debias_run(root, "ixg", run);
  std::ifstream in(root / "ixg" / "manifest.json");
  const auto manifest = Json::parse(in);
  EXPECT_EQ(manifest["method"], "ixg_l2");
  EXPECT_EQ(manifest["trajectory"].size(), 2u);
  EXPECT_EQ(manifest["selected"]["avg_iu"]["alpha"], 0.1);
  model::CheckpointStore store(root / "ixg");
  const auto& sel = run.selected(SelectionMetric::kAvgIu);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto id = "avg_iu-seed" + std::to_string(c.seeds[s]);
    EXPECT_EQ(store.load(id, sel.steps[s]).digest(), sel.models[s].digest());
  }
  std::filesystem::remove_all(root);
}

TEST(Comparison, AveragesOverSeeds) {
  fairness::FairnessReport a, b;
  a.accuracy = 80;
  b.accuracy = 90;
  a.disp_acc = 2;
  b.disp_acc = 4;
  a.disp_fpr = 10;
  a.avg_iu = 1;
  b.avg_iu = 3;
  auto row = comparison_row("grad_l2", "avg_iu", 1.0, {a, b});
  EXPECT_DOUBLE_EQ(row.accuracy, 85);
  EXPECT_DOUBLE_EQ(row.disp_acc, 3);
  EXPECT_DOUBLE_EQ(*row.disp_fpr, 10);
  EXPECT_FALSE(row.disp_fnr.has_value());
  EXPECT_DOUBLE_EQ(row.avg_iu, 2);
  EXPECT_THROW(comparison_row("x", "y", 0, {}), ConfigError);
}

}  // namespace
}  // namespace fairlens::debias
