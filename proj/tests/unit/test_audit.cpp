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

#include "fairlens/audit/audit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fairlens/audit/statistics.hpp"
#include "test_support.hpp"

namespace fairlens::audit {
namespace {

using testing::make_example;
using testing::race_vocab;

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, bool integers = false) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> k(0, 4);
  std::vector<double> v(n);
  for (auto& x : v) x = integers ? static_cast<double>(k(rng)) : u(rng);
  return v;
}

// Textbook two-pass formula in extended precision.
std::optional<double> pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<long double>(x.size());
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// rank = 1 + (#smaller) + (#equal - 1) / 2.
std::vector<double> rank_oracle(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = 1 + less + (equal - 1) / 2;
  }
  return r;
}

TEST(Statistics, PearsonMatchesOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 10);
    auto x = random_vector(rng, n);
    auto y = random_vector(rng, n);
    auto r = pearson(x, y);
    ASSERT_TRUE(r.has_value());
    EXPECT_NEAR(*r, *pearson_oracle(x, y), 1e-12);
    EXPECT_NEAR(*pearson(y, x), *r, 1e-14);
  }
}

TEST(Statistics, PearsonAffineInvariance) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = random_vector(rng, 8);
    auto y = random_vector(rng, 8);
    auto z = x;
    for (auto& v : z) v = 2.5 * v - 7.0;
    EXPECT_NEAR(*pearson(z, y), *pearson(x, y), 1e-12);
    for (auto& v : z) v = -v;
    EXPECT_NEAR(*pearson(z, y), -*pearson(x, y), 1e-12);
  }
}

TEST(Statistics, DegenerateInputs) {
  std::vector<double> c{1, 1, 1}, x{1, 2, 3};
  EXPECT_FALSE(pearson(c, x).has_value());
  EXPECT_FALSE(pearson_test(std::vector<double>{1, 2}, std::vector<double>{2, 1}).has_value());
  EXPECT_THROW(pearson(x, std::vector<double>{1, 2}), ConfigError);
  EXPECT_NEAR(*pearson(x, x), 1.0, 1e-15);
}

TEST(Statistics, PValueClosedForms) {
  // Student t with 1 and 2 degrees of freedom has closed-form tails.
  for (double r : {-0.95, -0.4, 0.0, 0.1, 0.5, 0.9}) {
    const double t1 = r / std::sqrt(1 - r * r);
    EXPECT_NEAR(pearson_p_value(r, 3), 1 - 2 / std::numbers::pi * std::atan(std::abs(t1)), 1e-12);
    const double t2 = r * std::sqrt(2.0) / std::sqrt(1 - r * r);
    EXPECT_NEAR(pearson_p_value(r, 4), 1 - std::abs(t2) / std::sqrt(t2 * t2 + 2), 1e-12);
  }
  EXPECT_DOUBLE_EQ(pearson_p_value(1.0, 10), 0.0);
}

TEST(Statistics, SpearmanMatchesRankOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 12);
    auto x = random_vector(rng, n, trial % 2 == 0);
    auto y = random_vector(rng, n, trial % 3 == 0);
    const auto rx = rank_oracle(x);
    EXPECT_EQ(average_ranks(x), rx);
    auto expected = pearson_oracle(rx, rank_oracle(y));
    auto got = spearman(x, y);
    ASSERT_EQ(got.has_value(), expected.has_value());
    if (got) EXPECT_NEAR(*got, *expected, 1e-12);
  }
}

TEST(Statistics, SpearmanMonotoneInvariance) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    auto x = random_vector(rng, 9);
    auto y = random_vector(rng, 9);
    auto z = x;
    for (auto& v : z) v = std::exp(v) + v * v * v;
    EXPECT_NEAR(*spearman(z, y), *spearman(x, y), 1e-12);
  }
}

TEST(Ranking, MrrExamples) {
  std::vector<double> truth{0.3, 0.1, 0.5, 0.4};
  EXPECT_DOUBLE_EQ(mrr_at_1(truth, truth), 1.0);
  EXPECT_NEAR(*score_ranking(truth, truth).rho, 1.0, 1e-15);
  // Fairest model (index 1) ranked second by the predictor.
  std::vector<double> second{0.2, 0.3, 0.9, 0.8};
  EXPECT_DOUBLE_EQ(mrr_at_1(second, truth), 0.5);
  // Predictor ties resolve by index.
  std::vector<double> flat{1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(mrr_at_1(flat, truth), 0.5);
  EXPECT_THROW(mrr_at_1(std::vector<double>{}, std::vector<double>{}), ConfigError);
}

TEST(Ranking, MrrMatchesOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 3 + static_cast<std::size_t>(trial % 6);
    auto p = random_vector(rng, k, true);
    auto t = random_vector(rng, k, true);
    std::size_t fairest = 0;
    for (std::size_t i = 1; i < k; ++i) {
      if (t[i] < t[fairest]) fairest = i;
    }
    std::size_t rank = 1;
    for (std::size_t i = 0; i < k; ++i) {
      if (p[i] < p[fairest] || (p[i] == p[fairest] && i < fairest)) ++rank;
    }
    EXPECT_DOUBLE_EQ(mrr_at_1(p, t), 1.0 / static_cast<double>(rank));
  }
}

TEST(Ranking, SelectionNeedsThreeCandidates) {
  SelectionInput in;
  in.candidates = {"a", "b"};
  in.explanation = {{1, 2}};
  in.baseline = {{1, 2}};
  in.test_avg_iu = {1, 2};
  EXPECT_THROW(select_models(in), ConfigError);
}

TEST(Ranking, SelectionAveragesResamples) {
  SelectionInput in;
  in.candidates = {"a", "b", "c"};
  in.explanation = {{1, 2, 3}, {1, 3, 2}};
  in.baseline = {{3, 2, 1}, {3, 2, 1}};
  in.test_avg_iu = {1, 2, 3};
  auto r = select_models(in);
  EXPECT_EQ(r.resamples, 2u);
  EXPECT_NEAR(*r.rho, 0.75, 1e-12);
  EXPECT_DOUBLE_EQ(r.mrr, 1.0);
  EXPECT_NEAR(*r.baseline_rho, -1.0, 1e-12);
  EXPECT_NEAR(r.baseline_mrr, 1.0 / 3.0, 1e-12);
}

attribution::RelianceRecord rel(const std::string& id, double value, Label pred, const std::string& group) {
  attribution::RelianceRecord r;
  r.example_id = id;
  r.reliance = value;
  r.prediction = pred;
  r.group = group;
  return r;
}

TEST(FairnessCorrelation, CellsMatchOracle) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<attribution::RelianceRecord> records;
  std::map<std::string, double> iu;
  std::map<std::pair<int, std::string>, std::pair<std::vector<double>, std::vector<double>>> cells;
  const std::vector<std::string> groups{"black", "white"};
  int id = 0;
  for (int c = 0; c < 2; ++c) {
    for (const auto& g : groups) {
      for (int i = 0; i < 12; ++i) {
        const auto name = "e" + std::to_string(id++);
        const double r = u(rng);
        const double v = 0.5 * r + 0.2 * u(rng);
        records.push_back(rel(name, r, static_cast<Label>(c), g));
        iu[name] = v;
        cells[{c, g}].first.push_back(r);
        cells[{c, g}].second.push_back(v);
      }
    }
  }
  // A two-example cell is skipped; an example without IU is counted.
  records.push_back(rel("x1", 0.1, Label::kToxic, "asian"));
  records.push_back(rel("x2", 0.2, Label::kToxic, "asian"));
  iu["x1"] = 0.1;
  iu["x2"] = 0.3;
  records.push_back(rel("lost", 0.2, Label::kToxic, "black"));

  auto fc = fairness_correlation(records, iu);
  EXPECT_EQ(fc.evaluated, 4u);
  EXPECT_EQ(fc.skipped, 1u);
  EXPECT_EQ(fc.missing_iu, 1u);
  double total = 0;
  for (const auto& cell : fc.cells) {
    if (!cell.correlation) continue;
    const auto& [x, y] = cells.at({class_index(cell.prediction), cell.group});
    const double r = *pearson_oracle(x, y);
    EXPECT_NEAR(cell.correlation->r, r, 1e-12);
    total += std::abs(r);
  }
  EXPECT_NEAR(*fc.mean_abs_r, total / 4, 1e-12);
  EXPECT_EQ(fc.significant, 4u);

  auto recs = rq1_records(fc, "occlusion", "m", "race", 3);
  ASSERT_EQ(recs.size(), 1 + fc.cells.size());
  EXPECT_FALSE(recs[0].cell_group.has_value());
  EXPECT_NEAR(*recs[0].stat("mean_abs_r"), *fc.mean_abs_r, 1e-15);
  for (std::size_t i = 1; i < recs.size(); ++i) EXPECT_TRUE(recs[i].cell_group.has_value());
  EXPECT_FALSE(fairness_correlation({}, iu).mean_abs_r.has_value());
}

TEST(Fairwash, Subtraction) {
  std::map<std::string, double> base{{"attention", 0.6}, {"occlusion", 0.8}};
  for (const auto& d : fairwash_delta(base, base)) EXPECT_DOUBLE_EQ(d.delta, 0.0);
  std::map<std::string, double> after{{"attention", 0.4}, {"grad_l2", 0.3}};
  auto deltas = fairwash_delta(base, after);
  ASSERT_EQ(deltas.size(), 1u);
  EXPECT_EQ(deltas[0].method, "attention");
  EXPECT_NEAR(deltas[0].delta, -0.2, 1e-15);
}

TEST(Fairwash, FromRecords) {
  auto summary = [](const std::string& method, double r, std::uint64_t seed, const std::string& bias) {
    AuditRecord rec;
    rec.kind = AuditKind::kRq1;
    rec.method = method;
    rec.bias_type = bias;
    rec.seed = seed;
    rec.set("mean_abs_r", r);
    return rec;
  };
  std::vector<AuditRecord> base{summary("attention", 0.5, 0, "race"), summary("attention", 0.7, 1, "race")};
  std::vector<AuditRecord> after{summary("attention", 0.2, 0, "race"), summary("attention", 0.4, 1, "race")};
  auto cell = summary("attention", 0.99, 0, "race");
  cell.cell_group = "black";
  after.push_back(cell);
  auto d = fairwash_delta(base, after);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NEAR(d[0].default_r, 0.6, 1e-15);
  EXPECT_NEAR(d[0].delta, -0.3, 1e-12);
  after.push_back(summary("occlusion", 0.1, 0, "gender"));
  EXPECT_THROW(fairwash_delta(base, after), DataError);
}

TEST(Faithfulness, RatiosRoundDownWithFloorOfOne) {
  EXPECT_EQ(tokens_for_ratio(10, 0.05), 1u);
  EXPECT_EQ(tokens_for_ratio(10, 0.10), 1u);
  EXPECT_EQ(tokens_for_ratio(10, 0.20), 2u);
  EXPECT_EQ(tokens_for_ratio(10, 0.50), 5u);
  EXPECT_EQ(tokens_for_ratio(40, 0.05), 2u);
  EXPECT_EQ(tokens_for_ratio(7, 0.5), 3u);
  EXPECT_THROW(tokens_for_ratio(5, 0.0), ConfigError);
  EXPECT_EQ(top_tokens(std::vector<double>{1, 1, 1, 1}, 2), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(top_tokens(std::vector<double>{0.1, 0.5, 0.5, 0.9}, 3), (std::vector<std::size_t>{3, 1, 2}));
}

TEST(Faithfulness, ExactTokenSubstitution) {
  std::vector<std::vector<std::string>> seen;
  testing::FunctionClassifier model([&](std::span<const std::string> t) {
    seen.emplace_back(t.begin(), t.end());
    for (const auto& w : t) {
      if (w == "stupid") return Probabilities{0.9, 0.1};
    }
    return Probabilities{0.1, 0.9};
  });
  auto e = make_example("f1", "black people are stupid and rude here today now ok", Label::kToxic, race_vocab());
  ASSERT_EQ(e.tokens.size(), 10u);
  std::vector<double> scores{0.1, 0.2, 0.0, 0.9, 0.3, 0.3, 0.0, 0.0, 0.0, 0.0};
  auto r = faithfulness(model, {e}, {scores}, kDefaultRatios, Execution::kSerial);
  // One original pass plus removed/kept per ratio.
  ASSERT_EQ(seen.size(), 1u + 2u * 4u);
  EXPECT_EQ(seen[1][3], "[MASK]");
  EXPECT_EQ(std::count(seen[1].begin(), seen[1].end(), "[MASK]"), 1);
  EXPECT_EQ(std::count(seen[2].begin(), seen[2].end(), "[MASK]"), 9);
  EXPECT_EQ(seen[2][3], "stupid");
  // 20%: tokens 3 and 4 (index 4 wins the 0.3 tie).
  EXPECT_EQ(seen[5][3], "[MASK]");
  EXPECT_EQ(seen[5][4], "[MASK]");
  EXPECT_EQ(seen[5][5], e.tokens[5]);
  // 50%: the top five are 3, 4, 5, 1, 0.
  for (std::size_t t : {0u, 1u, 3u, 4u, 5u}) EXPECT_EQ(seen[7][t], "[MASK]");
  for (std::size_t t : {2u, 6u, 7u, 8u, 9u}) EXPECT_EQ(seen[7][t], e.tokens[t]);
  for (double c : r.comprehensiveness) EXPECT_NEAR(c, 80.0, 1e-12);
  for (double s : r.sufficiency) EXPECT_NEAR(s, 0.0, 1e-12);
  EXPECT_NEAR(r.comp_aopc, 80.0, 1e-12);
  EXPECT_EQ(r.examples, 1u);
}

TEST(Judge, BucketsAndDegenerateCase) {
  auto r = judge_report("j", {true, true, false, false}, {0.2, 0.4, 0.0, 0.1});
  EXPECT_EQ(r.biased.count, 2u);
  EXPECT_NEAR(*r.biased.avg_iu, 30.0, 1e-12);
  EXPECT_NEAR(*r.unbiased.avg_iu, 5.0, 1e-12);
  EXPECT_NEAR(*r.correlation, *pearson_oracle({1, 1, 0, 0}, {0.2, 0.4, 0.0, 0.1}), 1e-12);
  auto all = judge_report("j", {true, true, true}, {0.2, 0.4, 0.1});
  EXPECT_EQ(all.unbiased.count, 0u);
  EXPECT_FALSE(all.unbiased.avg_iu.has_value());
  EXPECT_FALSE(all.correlation.has_value());
  const auto j = r.to_json();
  EXPECT_EQ(j["biased"]["count"], 2);
  EXPECT_NO_THROW(r.to_record("m", "race", 0).validate());
}

TEST(Judge, BinaryBaselineMatchesOracle) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> u(-50, 50);
  std::vector<attribution::RelianceRecord> recs;
  for (int i = 0; i < 1000; ++i) {
    recs.push_back(rel("id" + std::to_string(1000 + (i * 7919) % 1000), u(rng) / 10.0, Label::kToxic, "g"));
  }
  for (double fraction : {0.5, 0.25, 0.333}) {
    auto flags = reliance_binary_baseline(recs, fraction);
    const auto count = static_cast<std::size_t>(std::floor(fraction * 1000 + 1e-9));
    EXPECT_EQ(static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true)), count);
    // Every flagged record dominates every unflagged one.
    for (std::size_t a = 0; a < recs.size(); ++a) {
      if (!flags[a]) continue;
      for (std::size_t b = 0; b < recs.size(); ++b) {
        if (flags[b]) continue;
        const double x = std::abs(recs[a].reliance), y = std::abs(recs[b].reliance);
        ASSERT_TRUE(x > y || (x == y && recs[a].example_id < recs[b].example_id));
      }
    }
  }
}

TEST(Judge, SensitiveTermNaming) {
  auto vocab = race_vocab();
  EXPECT_TRUE(names_sensitive_term({"stupid", "black,"}, vocab));
  EXPECT_TRUE(names_sensitive_term({"\"white\""}, vocab));
  EXPECT_FALSE(names_sensitive_term({"people", "stupid"}, vocab));
}

TEST(AuditRecords, ValidationAndRoundTrip) {
  AuditRecord r;
  r.method = "occlusion";
  r.model_digest = "abc";
  r.bias_type = "race";
  r.set("r", 0.4).set("p", 0.01).set("n", 12).set("missing", std::nullopt);
  r.cell_class = Label::kToxic;
  r.cell_group = "black";
  EXPECT_NO_THROW(r.validate());
  const auto back = AuditRecord::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_EQ(back.key(), r.key());
  auto bad = r;
  bad.set("p", 1.5);
  EXPECT_THROW(bad.validate(), DataError);
  bad = r;
  bad.set("r", -1.2);
  EXPECT_THROW(bad.validate(), DataError);
}

TEST(AuditRecords, StoreIsIdempotent) {
  const auto path = std::filesystem::temp_directory_path() / "fairlens_audit_store.jsonl";
  std::filesystem::remove(path);
  AuditRecord r;
  r.method = "attention";
  r.set("mean_abs_r", 0.3);
  {
    AuditStore store(path);
    EXPECT_TRUE(store.append(r));
    EXPECT_FALSE(store.append(r));
    r.seed = 1;
    EXPECT_TRUE(store.append(r));
  }
  AuditStore reopened(path);
  EXPECT_EQ(reopened.size(), 2u);
  EXPECT_EQ(reopened.records()[1].seed, 1u);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace fairlens::audit
