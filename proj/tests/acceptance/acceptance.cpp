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

// Acceptance suite. Prints one PASS/FAIL line per criterion. The exit status
// is nonzero when a criterion fails unless it is listed with --allow-fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fairlens/attribution/attribution.hpp"
#include "fairlens/audit/audit.hpp"
#include "fairlens/audit/statistics.hpp"
#include "fairlens/corpus/counterfactual.hpp"
#include "fairlens/corpus/planted.hpp"
#include "fairlens/corpus/tokenizer.hpp"
#include "fairlens/debias/train.hpp"
#include "fairlens/digest.hpp"
#include "fairlens/fairness/metrics.hpp"
#include "fairlens/runner/config.hpp"
#include "fairlens/runner/pipeline.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace fairlens;
using attribution::Method;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "FAILED ") + what);
  }
};

// ---- shared planted run -----------------------------------------------------

fs::path g_work;

runner::RunConfig planted_config() {
  runner::RunConfig c;
  c.out = g_work / "planted";
  c.bias_type = corpus::kPlantedBiasType;
  runner::PlantedSource p;
  p.train = 1200;
  p.validation = 200;
  p.test = 400;
  c.planted = p;
  c.seeds = {0, 1, 2, 3, 4};
  c.methods = {Method::kAttention, Method::kGradL2, Method::kOcclusion};
  c.debias_methods = {debias::DebiasMethod::kAttention};
  c.alpha_grid = debias::kDefaultAlphaGrid;
  c.selection_metrics = {debias::SelectionMetric::kAvgIu};
  c.random_baseline_seeds = 20;
  c.judge.baseline_method = "occlusion";
  return c;
}

runner::Pipeline& planted_pipeline() {
  static runner::Pipeline p(planted_config());
  return p;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<attribution::RelianceRecord> reliances(const std::vector<attribution::AttributionRecord>& records,
                                                   const std::vector<corpus::Example>& examples, Method m) {
  std::map<std::string, const corpus::Example*> by_id;
  for (const auto& e : examples) by_id[e.id] = &e;
  std::vector<attribution::RelianceRecord> out;
  for (const auto& r : records) {
    if (r.method != m) continue;
    attribution::Attribution a;
    a.method = m;
    a.target = r.target;
    a.scores = r.scores;
    out.push_back(attribution::reliance(a, *by_id.at(r.example_id), r.prediction));
  }
  return out;
}

std::map<std::string, double> iu_map(const fairness::FairnessReport& r) {
  std::map<std::string, double> m;
  for (const auto& u : r.iu) m[u.example_id] = u.iu;
  return m;
}

// ---- 1: metric oracles --------------------------------------------------------

std::optional<long double> oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> oracle_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

double oracle_mrr(const std::vector<double>& p, const std::vector<double>& t) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (t[k] < t[best]) best = k;
  }
  std::size_t rank = 1;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < p[best] || (p[k] == p[best] && k < best)) ++rank;
  }
  return 1.0 / static_cast<double>(rank);
}

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, bool ties) {
  std::vector<double> v(n);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_int_distribution<int> small(0, 4);
  for (auto& x : v) x = ties ? small(rng) : normal(rng);
  return v;
}

// p_toxic = sigmoid(sum of per-token weights), weights drawn per instance.
testing::FunctionClassifier weighted_classifier(std::uint64_t seed) {
  return testing::FunctionClassifier([seed](std::span<const std::string> tokens) {
    double z = 0.0;
    for (const auto& t : tokens) {
      std::mt19937_64 rng(derive_seed(seed, t));
      z += std::normal_distribution<double>(0.0, 1.0)(rng);
    }
    const double p = 1.0 / (1.0 + std::exp(-z));
    return Probabilities{p, 1.0 - p};
  });
}

Outcome criterion_1() {
  Outcome o;
  constexpr double kTol = 1e-10;
  constexpr int kInstances = 200;
  std::mt19937_64 rng(20260101);
  std::uniform_int_distribution<std::size_t> size(3, 30);

  double pearson_err = 0, spearman_err = 0, mrr_err = 0, disp_err = 0, iu_err = 0, hm_err = 0;
  int pearson_degenerate_mismatch = 0;
  for (int i = 0; i < kInstances; ++i) {
    const std::size_t n = size(rng);
    const bool ties = i % 2 == 1;
    auto x = random_values(rng, n, ties);
    auto y = random_values(rng, n, ties);
    if (i % 50 == 0) std::fill(y.begin(), y.end(), 1.0);
    const auto got = audit::pearson(x, y);
    const auto want = oracle_pearson(x, y);
    if (got.has_value() != want.has_value()) {
      ++pearson_degenerate_mismatch;
    } else if (got) {
      pearson_err = std::max(pearson_err, static_cast<double>(std::abs(*got - *want)));
    }
    const auto s_got = audit::spearman(x, y);
    const auto s_want = oracle_pearson(oracle_ranks(x), oracle_ranks(y));
    if (s_got.has_value() != s_want.has_value()) {
      ++pearson_degenerate_mismatch;
    } else if (s_got) {
      spearman_err = std::max(spearman_err, static_cast<double>(std::abs(*s_got - *s_want)));
    }
    mrr_err = std::max(mrr_err, std::abs(audit::mrr_at_1(x, y) - oracle_mrr(x, y)));

    std::map<std::string, double> per_group;
    const std::size_t groups = 2 + i % 3;
    for (std::size_t g = 0; g < groups; ++g) {
      per_group["g" + std::to_string(g)] = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
    }
    long double m = 0;
    for (const auto& [_, v] : per_group) m += v;
    m /= groups;
    long double d = 0;
    for (const auto& [_, v] : per_group) d += std::abs(v - m);
    disp_err = std::max(disp_err, std::abs(fairness::disparity(per_group) - static_cast<double>(d)));

    const double acc = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
    const double unf = std::uniform_real_distribution<double>(-20.0, 140.0)(rng);
    const double b = 100.0 - std::clamp(unf, 0.0, 100.0);
    const double hm = acc + b > 0 ? 2.0 * acc * b / (acc + b) : 0.0;
    hm_err = std::max(hm_err, std::abs(debias::harmonic_metric(acc, unf) - hm));
  }
  o.check(pearson_degenerate_mismatch == 0, fmt::format("degenerate cases agree ({} mismatches)", pearson_degenerate_mismatch));
  o.check(pearson_err <= kTol, fmt::format("pearson max err {:.2e}", pearson_err));
  o.check(spearman_err <= kTol, fmt::format("spearman max err {:.2e}", spearman_err));
  o.check(mrr_err <= kTol, fmt::format("mrr@1 max err {:.2e}", mrr_err));
  o.check(disp_err <= kTol, fmt::format("disparity max err {:.2e}", disp_err));
  o.check(hm_err <= kTol, fmt::format("harmonic max err {:.2e}", hm_err));

  // Report-level disparity and IU against predictions computed by hand.
  const auto vocab = corpus::planted_vocabulary();
  corpus::PlantedConfig pc;
  pc.plant_rate = 0.5;
  double report_disp_err = 0;
  for (int i = 0; i < 100; ++i) {
    const auto eval = corpus::generate_planted(20, pc, 900 + i, "o");
    const auto model = weighted_classifier(static_cast<std::uint64_t>(i));
    const auto rep = fairness::fairness_report(model, eval, vocab, Execution::kSerial);
    std::map<std::string, std::pair<double, double>> correct;
    long double iu_total = 0;
    std::map<std::string, double> ius;
    for (const auto& e : eval) {
      const auto p = model.predict_proba(e.tokens);
      const Label y = p.toxic >= p.non_toxic ? Label::kToxic : Label::kNonToxic;
      correct[e.group].first += y == e.label;
      correct[e.group].second += 1;
      long double other = 0;
      int variants = 0;
      for (const auto& g : vocab.groups()) {
        if (g == e.group) continue;
        other += model.predict_proba(corpus::rewrite_to_group(e, vocab, g).tokens)[y];
        ++variants;
      }
      const double iu = static_cast<double>(std::abs(p[y] - other / variants));
      ius[e.id] = iu;
      iu_total += iu;
    }
    std::map<std::string, double> acc;
    for (const auto& [g, c] : correct) acc[g] = 100.0 * c.first / c.second;
    long double m = 0;
    for (const auto& [_, v] : acc) m += v;
    m /= acc.size();
    long double d = 0;
    for (const auto& [_, v] : acc) d += std::abs(v - m);
    report_disp_err = std::max(report_disp_err, std::abs(rep.disp_acc - static_cast<double>(d)));
    for (const auto& u : rep.iu) iu_err = std::max(iu_err, std::abs(u.iu - ius.at(u.example_id)));
    iu_err = std::max(iu_err, std::abs(rep.avg_iu - static_cast<double>(100.0L * iu_total / eval.size())));
  }
  o.check(report_disp_err <= kTol, fmt::format("report disp_acc max err {:.2e}", report_disp_err));
  o.check(iu_err <= kTol, fmt::format("IU/Avg_iu max err {:.2e}", iu_err));
  return o;
}

// ---- 2: attribution axioms -------------------------------------------------------

const char* kSentences[] = {"the black people are stupid idiots", "she is a kind white nurse",
                            "a black doctor is lovely", "black people are kind"};

Outcome criterion_2() {
  Outcome o;
  const auto vocab = testing::race_vocab();
  double grad_err = 0, ig_ratio = 0, occ_err = 0, shap_err = 0;
  bool abs_exact = true;
  for (std::uint64_t seed : {101u, 102u, 103u}) {
    const auto model = testing::small_model(seed);
    int k = 0;
    for (const char* text : kSentences) {
      const auto e = testing::make_example("a" + std::to_string(k++), text, Label::kToxic, vocab);
      const auto x = model.embeddings(e.tokens);
      for (Label c : {Label::kToxic, Label::kNonToxic}) {
        // (a) gradients against central differences, element by element.
        const double h = 1e-5;
        model::Matrix fd(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          model::Matrix up = x, down = x;
          up.data()[i] += h;
          down.data()[i] -= h;
          fd.data()[i] = (model.predict_from_embeddings(up)[c] - model.predict_from_embeddings(down)[c]) / (2 * h);
        }
        const auto g = attribution::attribute_dims(model, e, c, Method::kGradMean);
        grad_err = std::max(grad_err, (g - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff());
        const auto ixg = attribution::attribute_dims(model, e, c, Method::kIxgMean);
        const model::Matrix ixg_fd = x.cwiseProduct(fd);
        grad_err = std::max(grad_err, (ixg - ixg_fd).cwiseAbs().maxCoeff() / ixg_fd.cwiseAbs().maxCoeff());
        for (auto [m, dims] : {std::pair<Method, const model::Matrix*>{Method::kGradL2, &fd}, std::pair<Method, const model::Matrix*>{Method::kIxgL2, &ixg_fd}}) {
          const auto scores = attribution::attribute(model, e, c, m).scores;
          for (std::size_t t = 0; t < scores.size(); ++t) {
            const double want = dims->row(static_cast<Eigen::Index>(t)).norm();
            grad_err = std::max(grad_err, std::abs(scores[t] - want) / std::max(want, 1e-12));
          }
        }
        // (b) integrated-gradients completeness.
        attribution::AttributionParams params;
        params.intgrad_steps = 128;
        const auto ig = attribution::attribute_dims(model, e, c, Method::kIntGradMean, params);
        const std::vector<std::string> base(e.tokens.size(), model::kMaskToken);
        const double diff = model.predict_proba(e.tokens)[c] - model.predict_proba(base)[c];
        ig_ratio = std::max(ig_ratio, std::abs(ig.sum() - diff) / (0.01 * std::abs(diff) + 1e-3));
        // (c) occlusion and (e) its absolute value.
        const auto occ = attribution::attribute(model, e, c, Method::kOcclusion).scores;
        const auto occ_abs = attribution::attribute(model, e, c, Method::kOcclusionAbs).scores;
        for (std::size_t t = 0; t < e.tokens.size(); ++t) {
          auto edited = e.tokens;
          edited[t] = model::kMaskToken;
          const double want = model.predict_proba(e.tokens)[c] - model.predict_proba(edited)[c];
          occ_err = std::max(occ_err, std::abs(occ[t] - want));
          abs_exact = abs_exact && occ_abs[t] == std::abs(occ[t]);
        }
        // (d) kernel SHAP against enumerated Shapley values.
        if (e.tokens.size() <= 8) {
          attribution::AttributionParams sp;
          sp.kernelshap_samples = 256;
          const auto shap = attribution::attribute(model, e, c, Method::kKernelShap, sp).scores;
          const int m = static_cast<int>(e.tokens.size());
          auto value = [&](unsigned mask) {
            auto edited = e.tokens;
            for (int j = 0; j < m; ++j) {
              if (!(mask >> j & 1u)) edited[static_cast<std::size_t>(j)] = model::kMaskToken;
            }
            return model.predict_proba(edited)[c];
          };
          std::vector<double> v(1u << m);
          for (unsigned mask = 0; mask < v.size(); ++mask) v[mask] = value(mask);
          for (int i = 0; i < m; ++i) {
            long double phi = 0;
            for (unsigned mask = 0; mask < v.size(); ++mask) {
              if (mask >> i & 1u) continue;
              const int s = std::popcount(mask);
              const long double w = std::tgamma(s + 1.0L) * std::tgamma(m - s + 0.0L) / std::tgamma(m + 1.0L);
              phi += w * (v[mask | (1u << i)] - v[mask]);
            }
            shap_err = std::max(shap_err, std::abs(shap[static_cast<std::size_t>(i)] - static_cast<double>(phi)));
          }
        }
      }
    }
  }
  o.check(grad_err <= 1e-3, fmt::format("(a) grad/ixg vs finite differences max rel err {:.2e}", grad_err));
  o.check(ig_ratio <= 1.0, fmt::format("(b) intgrad completeness error at most {:.2f} of tolerance", ig_ratio));
  o.check(occ_err <= 1e-6, fmt::format("(c) occlusion max err {:.2e}", occ_err));
  o.check(shap_err <= 1e-6, fmt::format("(d) kernelshap vs exact Shapley max err {:.2e}", shap_err));
  o.check(abs_exact, "(e) occlusion_abs == |occlusion|");
  return o;
}

// ---- 3: invariance suite -----------------------------------------------------------

Outcome criterion_3() {
  Outcome o;
  const auto vocab = corpus::planted_vocabulary();
  corpus::PlantedConfig pc;
  pc.plant_rate = 0.5;
  const auto eval = corpus::generate_planted(200, pc, 77, "inv");
  const auto words = model::ReferenceModel::build_vocabulary(eval, vocab.all_terms());

  // Tie the two group-token embeddings: the model cannot tell the groups apart.
  auto model = model::ReferenceModel::create(words, {}, 5);
  {
    const auto& cfg = model.config();
    const int a = model.token_id(vocab.terms(corpus::kPlantedToxicGroup).front());
    const int b = model.token_id(vocab.terms(corpus::kPlantedBenignGroup).front());
    auto p = model.parameters();
    const std::size_t base = model.layout().tok_emb;
    for (int d = 0; d < cfg.dim; ++d) {
      p[base + static_cast<std::size_t>(b * cfg.dim + d)] = p[base + static_cast<std::size_t>(a * cfg.dim + d)];
    }
  }
  const auto inv = fairness::fairness_report(model, eval, vocab);
  o.check(inv.avg_iu == 0.0, fmt::format("group-invariant model Avg_iu = {}", inv.avg_iu));

  // Frozen head on a set where every example appears once per group.
  auto frozen = model::ReferenceModel::create(words, {}, 6);
  frozen.zero_head();
  std::vector<corpus::Example> balanced;
  for (const auto& e : eval) {
    if (e.group != corpus::kPlantedToxicGroup) continue;
    balanced.push_back(e);
    auto w = corpus::rewrite_to_group(e, vocab, corpus::kPlantedBenignGroup);
    w.id = e.id + "-cf";
    balanced.push_back(w);
  }
  const auto fr = fairness::fairness_report(frozen, balanced, vocab);
  o.check(fr.disp_acc == 0.0, fmt::format("frozen head disp_acc = {}", fr.disp_acc));

  // Reliance: largest |score| over sensitive tokens, lowest index on ties.
  const auto race = testing::race_vocab();
  const auto e = testing::make_example("r", "black people and black friends and african american folks", Label::kToxic, race);
  const auto sens = e.sensitive_token_indices();
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(-3, 3);
  bool reliance_ok = true;
  for (int trial = 0; trial < 500; ++trial) {
    attribution::Attribution a;
    a.scores.resize(e.tokens.size());
    for (auto& s : a.scores) s = pick(rng) * 0.25;
    int best = -1;
    for (int i : sens) {
      if (best < 0 || std::abs(a.scores[static_cast<std::size_t>(i)]) > std::abs(a.scores[static_cast<std::size_t>(best)])) best = i;
    }
    const auto r = attribution::reliance(a, e);
    reliance_ok = reliance_ok && r.arg_token == best && r.reliance == a.scores[static_cast<std::size_t>(best)];
  }
  o.check(reliance_ok, "reliance picks the first sensitive token of largest |score| (500 vectors)");
  const bool argmax_ok = Probabilities{0.5, 0.5}.argmax() == Label::kToxic &&
                         Probabilities{0.49, 0.51}.argmax() == Label::kNonToxic &&
                         Probabilities{0.51, 0.49}.argmax() == Label::kToxic;
  o.check(argmax_ok, "argmax ties resolve to toxic");
  return o;
}

// ---- 4: RQ1 direction --------------------------------------------------------------

Outcome criterion_4() {
  Outcome o;
  auto& p = planted_pipeline();
  for (const char* sub : {"ingest", "train", "attribute", "audit-rq1"}) p.run(sub);
  std::vector<double> r, sig;
  for (const auto& e : p.models("default")) {
    const auto m = p.load_model(e);
    const auto rep = p.report(m, "test", e.seed);
    const auto fc = audit::fairness_correlation(
        reliances(p.attributions(m, "test", {Method::kOcclusion}, e.seed), p.split("test"), Method::kOcclusion),
        iu_map(rep));
    r.push_back(fc.mean_abs_r.value_or(0.0));
    sig.push_back(fc.evaluated ? static_cast<double>(fc.significant) / static_cast<double>(fc.evaluated) : 0.0);
  }
  o.check(r.size() == 5, fmt::format("{} seeds", r.size()));
  o.check(mean_of(r) >= 0.5, fmt::format("occlusion mean |r| {:.3f} (>= 0.5)", mean_of(r)));
  o.check(mean_of(sig) >= 0.5, fmt::format("significant cell fraction {:.2f} (>= 0.5)", mean_of(sig)));
  return o;
}

// ---- 5: RQ3 effect -----------------------------------------------------------------

Outcome criterion_5() {
  Outcome o;
  auto& p = planted_pipeline();
  const auto& train = p.split("train");
  const auto& test = p.split("test");
  const auto& vocab = p.vocabulary();
  const auto& cfg = p.config();
  std::vector<std::string> extra;
  for (const auto& t : vocab.all_terms()) {
    for (auto& w : corpus::token_texts(t)) extra.push_back(w);
  }
  const auto words = model::ReferenceModel::build_vocabulary(train, extra);

  debias::DebiasConfig dc;
  dc.method = debias::DebiasMethod::kIxgL2;
  dc.alpha_grid = {0.0};
  for (double a : debias::kDefaultAlphaGrid) dc.alpha_grid.push_back(a);
  dc.metrics = {debias::SelectionMetric::kAvgIu};
  dc.seeds = {0, 1, 2};
  dc.fine_tune = cfg.fine_tune;
  const auto run = debias::train_debiased(
      [&](std::uint64_t s) { return model::ReferenceModel::create(words, cfg.model, derive_seed(s, "init")); }, train,
      p.split("validation"), vocab, dc);

  struct Row {
    double alpha, score, acc, iu, rel;
  };
  std::vector<Row> rows;
  for (double a : dc.alpha_grid) {
    const auto& c = run.candidate(a, debias::SelectionMetric::kAvgIu);
    std::vector<double> acc, iu, rel;
    for (const auto& m : c.models) {
      const auto rep = fairness::fairness_report(m, test, vocab);
      acc.push_back(rep.accuracy);
      iu.push_back(rep.avg_iu);
      const auto batch = attribution::batch_attribute(m, test, {Method::kIxgL2});
      double total = 0;
      for (const auto& rr : reliances(batch.records, test, Method::kIxgL2)) total += std::abs(rr.reliance);
      rel.push_back(total / static_cast<double>(test.size()));
    }
    rows.push_back({a, c.score, mean_of(acc), mean_of(iu), mean_of(rel)});
  }
  std::string table;
  for (const auto& r : rows) table += fmt::format(" a={}:iu {:.2f}/acc {:.1f}/rel {:.4f};", r.alpha, r.iu, r.acc, r.rel);
  // Select over the nonzero grid by validation score; ties go to the smaller alpha.
  const Row* best = nullptr;
  for (const auto& r : rows) {
    if (r.alpha > 0 && (!best || r.score > best->score)) best = &r;
  }
  const Row& zero = rows.front();
  const double reduction = zero.iu > 0 ? 1.0 - best->iu / zero.iu : 0.0;
  int inversions = 0;
  for (std::size_t k = 2; k < rows.size(); ++k) inversions += rows[k].rel > rows[k - 1].rel;
  o.check(reduction >= 0.5, fmt::format("selected alpha {} cuts Avg_iu {:.2f} -> {:.2f} ({:.0f}%)", best->alpha, zero.iu,
                                        best->iu, 100 * reduction));
  o.check(zero.acc - best->acc <= 5.0, fmt::format("accuracy {:.2f} -> {:.2f}", zero.acc, best->acc));
  o.check(inversions <= 1, fmt::format("reliance inversions over the grid: {}", inversions));
  o.notes.push_back("per alpha:" + table);
  return o;
}

// ---- 6: fairwash direction -------------------------------------------------------

Outcome criterion_6() {
  Outcome o;
  auto& p = planted_pipeline();
  p.run("debias-rq3");
  p.run("fairwash");
  std::map<std::string, double> delta;
  std::map<std::string, std::pair<double, double>> detail;
  for (const auto& r : p.models("debias")) {
    if (r.alpha) detail["alpha"].first = *r.alpha;
  }
  for (const auto& rec : audit::AuditStore(p.config().out / "audit.jsonl").records()) {
    if (rec.kind != audit::AuditKind::kFairwash || rec.config_digest != p.config_digest()) continue;
    delta[rec.method] = rec.stat("delta").value_or(std::nan(""));
    detail[rec.method] = {rec.stat("default_r").value_or(0), rec.stat("debiased_r").value_or(0)};
  }
  const double att = delta.count("attention:attention") ? delta["attention:attention"] : std::nan("");
  const double occ = delta.count("attention:occlusion") ? delta["attention:occlusion"] : std::nan("");
  o.check(att < 0, fmt::format("attention delta {:+.3f} ({:.3f} -> {:.3f}) < 0", att, detail["attention:attention"].first,
                               detail["attention:attention"].second));
  o.check(occ >= -0.1, fmt::format("occlusion delta {:+.3f} ({:.3f} -> {:.3f}) >= -0.1", occ,
                                   detail["attention:occlusion"].first, detail["attention:occlusion"].second));
  o.notes.push_back(fmt::format("selected alpha {}", detail["alpha"].first));
  return o;
}

// ---- 7: judge report ------------------------------------------------------------

Outcome criterion_7() {
  Outcome o;
  auto& p = planted_pipeline();
  p.run("llm-judge");
  const std::vector<std::string> keys{"biased_count", "unbiased_count", "biased_avg_iu", "unbiased_avg_iu", "correlation"};
  int judge_records = 0;
  bool shape_ok = true;
  for (const auto& rec : audit::AuditStore(p.config().out / "audit.jsonl").records()) {
    if (rec.kind != audit::AuditKind::kLlmJudge || rec.config_digest != p.config_digest()) continue;
    ++judge_records;
    for (const auto& k : keys) {
      shape_ok = shape_ok && std::any_of(rec.stats.begin(), rec.stats.end(), [&](const auto& s) { return s.first == k; });
    }
    const auto total = rec.stat("biased_count").value_or(-1) + rec.stat("unbiased_count").value_or(-1) +
                       rec.stat("unparseable").value_or(0) + rec.stat("excluded").value_or(0);
    shape_ok = shape_ok && total == static_cast<double>(p.split("test").size());
  }
  o.check(judge_records == 15 && shape_ok,
          fmt::format("{} judge records with counts, per-bucket Avg_iu and correlation", judge_records));

  // grad_l2 binary baseline on the planted reference models.
  std::vector<double> biased, unbiased;
  for (const auto& e : p.models("default")) {
    const auto m = p.load_model(e);
    const auto rel = reliances(p.attributions(m, "test", {Method::kGradL2}, e.seed), p.split("test"), Method::kGradL2);
    const auto iu = iu_map(p.report(m, "test", e.seed));
    std::vector<double> ius;
    for (const auto& r : rel) ius.push_back(iu.at(r.example_id));
    const auto rep = audit::judge_report("grad_l2_binary", audit::reliance_binary_baseline(rel), ius);
    biased.push_back(rep.biased.avg_iu.value_or(0));
    unbiased.push_back(rep.unbiased.avg_iu.value_or(0));
  }
  o.check(mean_of(biased) > mean_of(unbiased),
          fmt::format("grad_l2 binary Avg_iu biased / unbiased {:.2f} / {:.2f}", mean_of(biased), mean_of(unbiased)));
  return o;
}

// ---- 8: faithfulness -----------------------------------------------------------------

Outcome criterion_8() {
  Outcome o;
  auto& p = planted_pipeline();
  p.run("faithfulness");
  std::map<std::string, std::vector<double>> comp;
  for (const auto& rec : audit::AuditStore(p.config().out / "audit.jsonl").records()) {
    if (rec.kind != audit::AuditKind::kFaithfulness || rec.config_digest != p.config_digest()) continue;
    comp[rec.method].push_back(rec.stat("comp_aopc").value_or(0));
  }
  o.check(mean_of(comp["grad_l2"]) > mean_of(comp["random"]),
          fmt::format("grad_l2 comprehensiveness {:.2f} > random {:.2f} (20 seeds)", mean_of(comp["grad_l2"]),
                      mean_of(comp["random"])));

  const std::vector<std::size_t> want{1, 1, 2, 5};
  bool ratios_ok = true;
  for (std::size_t i = 0; i < audit::kDefaultRatios.size(); ++i) {
    ratios_ok = ratios_ok && audit::tokens_for_ratio(10, audit::kDefaultRatios[i]) == want[i];
  }
  o.check(ratios_ok && audit::tokens_for_ratio(3, 0.05) == 1, "ratios {5,10,20,50}% of 10 tokens keep 1/1/2/5");

  // Record the exact inputs the classifier sees.
  std::vector<std::vector<std::string>> seen;
  testing::FunctionClassifier recorder([&](std::span<const std::string> t) {
    seen.emplace_back(t.begin(), t.end());
    return Probabilities{0.9, 0.1};
  });
  const auto e = testing::make_example("f", "black people are stupid and rude here today now ok", Label::kToxic,
                                       testing::race_vocab());
  std::vector<double> scores(e.tokens.size());
  std::iota(scores.begin(), scores.end(), 0.0);
  audit::faithfulness(recorder, {e}, {scores}, audit::kDefaultRatios, Execution::kSerial);
  bool subst_ok = !seen.empty();
  for (const auto& input : seen) {
    subst_ok = subst_ok && input.size() == e.tokens.size();
    std::size_t masked = 0;
    for (std::size_t t = 0; t < input.size() && subst_ok; ++t) {
      if (input[t] == model::kMaskToken) {
        ++masked;
      } else {
        subst_ok = input[t] == e.tokens[t];
      }
    }
    subst_ok = subst_ok && (masked == 0 || masked == 1 || masked == 2 || masked == 5 || masked == 9 ||
                            masked == 8 || masked == 5);
  }
  // Comprehensiveness at 20% masks the two highest-scoring tokens.
  auto top2 = e.tokens;
  top2[8] = top2[9] = model::kMaskToken;
  subst_ok = subst_ok && std::find(seen.begin(), seen.end(), top2) != seen.end();
  o.check(subst_ok, fmt::format("replacement inputs substitute exactly the chosen tokens ({} inputs)", seen.size()));
  return o;
}

// ---- 9: determinism ------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    out[fs::relative(entry.path(), root).generic_string()] = buf.str();
  }
  return out;
}

runner::RunConfig tiny_config(const fs::path& out) {
  runner::RunConfig c;
  c.out = out;
  runner::PlantedSource ps;
  ps.train = 120;
  ps.validation = 60;
  ps.test = 60;
  c.planted = ps;
  c.bias_type = corpus::kPlantedBiasType;
  c.model.dim = 16;
  c.model.heads = 2;
  c.model.layers = 1;
  c.model.ff_dim = 32;
  c.model.max_length = 16;
  c.fine_tune.epochs = 2;
  c.fine_tune.learning_rate = 1e-2;
  c.methods = {Method::kAttention, Method::kGradL2, Method::kOcclusion, Method::kKernelShap};
  c.debias_methods = {debias::DebiasMethod::kIxgL2};
  c.alpha_grid = {1.0, 10.0};
  c.selection_metrics = {debias::SelectionMetric::kAvgIu, debias::SelectionMetric::kDispAcc};
  c.default_validation_size = 40;
  c.validation_resamples = 2;
  c.random_baseline_seeds = 2;
  return c;
}

Outcome criterion_9() {
  Outcome o;
  const fs::path a = g_work / "determinism-a", b = g_work / "determinism-b";
  for (const auto& dir : {a, b}) {
    fs::remove_all(dir);
    runner::Pipeline(tiny_config(dir)).planted_bench();
  }
  const auto sa = snapshot(a), sb = snapshot(b);
  std::size_t differing = 0;
  for (const auto& [k, v] : sa) differing += !sb.count(k) || sb.at(k) != v;
  o.check(sa.size() == sb.size() && differing == 0,
          fmt::format("two fresh runs: {} files, {} differ", sa.size(), differing));
  runner::Pipeline(tiny_config(a)).planted_bench();
  const auto again = snapshot(a);
  differing = 0;
  for (const auto& [k, v] : sa) differing += !again.count(k) || again.at(k) != v;
  o.check(again.size() == sa.size() && differing == 0, fmt::format("rerun in place: {} files changed", differing));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairlens acceptance suite"};
  std::vector<int> only, allow_fail;
  std::string work = (fs::temp_directory_path() / "fairlens-acceptance").string();
  bool keep = false;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--allow-fail", allow_fail, "Criteria whose failure does not fail the run")->delimiter(',');
  app.add_option("--work", work, "Scratch directory");
  app.add_flag("--keep", keep, "Reuse stores left by an earlier run");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);
  g_work = work;
  if (!keep) fs::remove_all(g_work);
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric oracles", criterion_1},
      {"attribution axioms", criterion_2},
      {"invariance suite", criterion_3},
      {"RQ1 direction on planted benchmark", criterion_4},
      {"RQ3 debiasing effect on planted benchmark", criterion_5},
      {"fairwash direction on planted benchmark", criterion_6},
      {"judge report schema and binary baseline", criterion_7},
      {"faithfulness sanity", criterion_8},
      {"determinism", criterion_9},
  };
  int blocking = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.notes.push_back(std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string notes;
    for (const auto& n : out.notes) notes += (notes.empty() ? "" : "; ") + n;
    const bool allowed = std::find(allow_fail.begin(), allow_fail.end(), id) != allow_fail.end();
    std::cout << fmt::format("[{}] criterion {}: {} ({:.1f} s) -- {}", out.pass ? "PASS" : "FAIL", id,
                             criteria[i].first, secs, notes)
              << (out.pass || !allowed ? "" : " [known failure]") << std::endl;
    if (!out.pass && !allowed) ++blocking;
  }
  return blocking == 0 ? 0 : 1;
}
