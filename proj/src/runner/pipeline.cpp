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

#include "fairlens/runner/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "fairlens/corpus/ingest.hpp"
#include "fairlens/corpus/planted.hpp"
#include "fairlens/corpus/sampling.hpp"
#include "fairlens/corpus/tokenizer.hpp"
#include "fairlens/debias/train.hpp"
#include "fairlens/digest.hpp"
#include "fairlens/model/checkpoint.hpp"
#include "fairlens/model/decoder.hpp"
#include "fairlens/model/fine_tune.hpp"
#include "fairlens/runner/plot.hpp"

namespace fairlens::runner {

namespace {

using attribution::Method;

constexpr const char* kModelIndex = "models/index.jsonl";
constexpr const char* kReports = "reports.jsonl";
constexpr const char* kAudit = "audit.jsonl";

std::string method_name(Method m) { return std::string(attribution::to_string(m)); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Digest of a set of models, independent of their order.
std::string digest_of_models(std::vector<std::string> digests) {
  std::sort(digests.begin(), digests.end());
  DigestBuilder b;
  for (const auto& d : digests) b.add(d);
  return b.finish().substr(0, 16);
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"ingest",       "train",     "attribute", "audit-rq1",
                                              "select-rq2",   "debias-rq3", "faithfulness",
                                              "llm-judge",    "fairwash",  "plot",      "planted-bench"};
  return names;
}

Json ModelEntry::to_json(const std::string& config_digest) const {
  Json j;
  j["key"] = run_id + "@" + std::to_string(step) + "|" + config_digest;
  j["run_id"] = run_id;
  j["role"] = role;
  j["seed"] = seed;
  j["step"] = step;
  j["model_digest"] = model_digest;
  j["config_digest"] = config_digest;
  j["debias_method"] = debias_method;
  j["selection_metric"] = selection_metric;
  j["alpha"] = alpha ? Json(*alpha) : Json(nullptr);
  j["checkpoint"] = checkpoint;
  return j;
}

ModelEntry ModelEntry::from_json(const Json& j) {
  ModelEntry e;
  e.run_id = j.at("run_id").get<std::string>();
  e.role = j.at("role").get<std::string>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.step = j.at("step").get<int>();
  e.model_digest = j.at("model_digest").get<std::string>();
  e.debias_method = j.value("debias_method", std::string());
  e.selection_metric = j.value("selection_metric", std::string());
  if (j.contains("alpha") && !j.at("alpha").is_null()) e.alpha = j.at("alpha").get<double>();
  e.checkpoint = j.at("checkpoint").get<std::string>();
  return e;
}

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)), digest_(config_.digest()) {
  std::filesystem::create_directories(config_.out);
  write_config();
}

void Pipeline::write_config() const {
  Json j;
  j["config_digest"] = digest_;
  j["config"] = config_.to_json();
  write_text(path("config.json"), j.dump(2) + "\n");
}

void Pipeline::run(const std::string& sub) {
  spdlog::info("{} (config {})", sub, digest_);
  if (sub == "ingest") return ingest();
  if (sub == "train") return train();
  if (sub == "attribute") return attribute();
  if (sub == "audit-rq1") return audit_rq1();
  if (sub == "select-rq2") return select_rq2();
  if (sub == "debias-rq3") return debias_rq3();
  if (sub == "faithfulness") return faithfulness();
  if (sub == "llm-judge") return llm_judge();
  if (sub == "fairwash") return fairwash();
  if (sub == "plot") return plot();
  if (sub == "planted-bench") {
    planted_bench();
    return;
  }
  throw ConfigError("unknown subcommand: " + sub);
}

// ---- data -----------------------------------------------------------------

void Pipeline::ingest() {
  std::filesystem::create_directories(path("data"));
  corpus::GroupVocabulary vocab;
  std::map<std::string, std::vector<corpus::Example>> out;
  if (config_.planted) {
    const auto& p = *config_.planted;
    vocab = corpus::planted_vocabulary();
    corpus::PlantedConfig train_cfg;
    train_cfg.plant_rate = p.plant_rate;
    train_cfg.cue_reliability = p.cue_reliability;
    corpus::PlantedConfig eval_cfg = train_cfg;
    eval_cfg.plant_rate = p.eval_plant_rate;
    out["train"] = corpus::generate_planted(p.train, train_cfg, derive_seed(p.seed, "train"), "train-");
    out["validation"] =
        corpus::generate_planted(p.validation, eval_cfg, derive_seed(p.seed, "validation"), "val-");
    out["test"] = corpus::generate_planted(p.test, eval_cfg, derive_seed(p.seed, "test"), "test-");
  } else {
    auto vocabularies = corpus::load_vocabularies(*config_.vocabulary);
    auto it = vocabularies.find(config_.bias_type);
    if (it == vocabularies.end()) {
      throw ConfigError("bias_type: " + config_.bias_type + " not found in " + config_.vocabulary->string());
    }
    vocab = it->second;
    std::vector<std::string> exclusions;
    if (config_.exclusions) exclusions = corpus::load_term_list(*config_.exclusions);
    corpus::IngestOptions options;
    options.toxicity_threshold = config_.toxicity_threshold;
    for (const auto& [name, src] : {std::pair{"train", &config_.train}, std::pair{"validation", &config_.validation},
                                    std::pair{"test", &config_.test}}) {
      auto result = corpus::ingest_file((*src)->path, (*src)->format, vocab, exclusions, options);
      const auto& s = result.stats;
      spdlog::info("ingest {}: read {}, kept {}, no terms {}, mixed groups {}, excluded {}, malformed {}",
                   name, s.read, s.kept, s.no_terms, s.multiple_groups, s.excluded, s.malformed);
      out[name] = std::move(result.examples);
    }
  }
  std::vector<Json> vocab_records;
  for (const auto& r : vocab.to_json_records()) vocab_records.push_back(r);
  write_jsonl(path("data/vocabulary.jsonl"), vocab_records);
  for (auto& [name, examples] : out) {
    corpus::save_examples(path("data/" + name + ".jsonl"), examples);
    splits_[name] = std::move(examples);
  }
  vocab_ = vocab;
}

const std::vector<corpus::Example>& Pipeline::split(const std::string& name) {
  auto it = splits_.find(name);
  if (it != splits_.end()) return it->second;
  const auto file = path("data/" + name + ".jsonl");
  if (!std::filesystem::exists(file)) throw DataError("no " + name + " split; run ingest first");
  return splits_[name] = corpus::load_examples(file);
}

const corpus::GroupVocabulary& Pipeline::vocabulary() {
  if (!vocab_) {
    const auto file = path("data/vocabulary.jsonl");
    if (!std::filesystem::exists(file)) throw DataError("no vocabulary store; run ingest first");
    auto all = corpus::vocabularies_from_records(read_jsonl(file), false);
    auto it = all.find(config_.bias_type);
    if (it == all.end()) throw DataError("vocabulary store lacks bias type " + config_.bias_type);
    vocab_ = it->second;
  }
  return *vocab_;
}

// ---- models ---------------------------------------------------------------

std::vector<ModelEntry> Pipeline::models(const std::string& role) const {
  std::vector<ModelEntry> out;
  const auto file = path(kModelIndex);
  if (!std::filesystem::exists(file)) return out;
  for (const auto& j : read_jsonl(file)) {
    if (j.value("config_digest", std::string()) != digest_) continue;
    auto e = ModelEntry::from_json(j);
    if (role.empty() || e.role == role) out.push_back(std::move(e));
  }
  return out;
}

model::ReferenceModel Pipeline::load_model(const ModelEntry& entry) const {
  auto m = model::read_checkpoint(config_.out / entry.checkpoint);
  if (m.digest() != entry.model_digest) {
    throw DataError("checkpoint " + entry.checkpoint + " does not match its recorded digest");
  }
  return m;
}

model::ReferenceModel Pipeline::initial_model(std::uint64_t seed) {
  std::vector<std::string> extra;
  for (const auto& term : vocabulary().all_terms()) {
    for (auto& t : corpus::token_texts(term)) extra.push_back(std::move(t));
  }
  const auto words = model::ReferenceModel::build_vocabulary(split("train"), extra);
  return model::ReferenceModel::create(words, config_.model, derive_seed(seed, "init"));
}

void Pipeline::train() {
  JsonlStore index(path(kModelIndex));
  model::CheckpointStore store(path("models"));
  const auto existing = models("default");
  for (auto seed : config_.seeds) {
    const std::string run_id = "default-seed" + std::to_string(seed);
    if (std::any_of(existing.begin(), existing.end(), [&](const ModelEntry& e) { return e.run_id == run_id; })) {
      spdlog::info("train: {} already present", run_id);
      continue;
    }
    auto fc = debias::seeded_fine_tune(config_.fine_tune, seed);
    fc.execution = config_.execution;
    auto result = model::fine_tune(initial_model(seed), split("train"), fc);
    if (result.diverged) spdlog::warn("train: {} diverged; keeping last finite parameters", run_id);
    const auto file = store.save(run_id, result.steps, result.model);
    ModelEntry e;
    e.run_id = run_id;
    e.role = "default";
    e.seed = seed;
    e.step = result.steps;
    e.model_digest = result.model.digest();
    e.checkpoint = std::filesystem::relative(file, config_.out).generic_string();
    index.append(e.to_json(digest_));
    spdlog::info("train: {} step {} digest {}", run_id, e.step, e.model_digest);
  }
}

// ---- cached evaluations ----------------------------------------------------

fairness::FairnessReport Pipeline::report(const model::Classifier& model, const std::string& split_name,
                                          std::uint64_t seed) {
  const auto& examples = split(split_name);
  const std::string key = model.digest() + "|" + fairness::eval_set_digest(examples) + "|" + digest_;
  JsonlStore store(path(kReports));
  if (store.contains(key)) {
    for (const auto& j : store.records()) {
      if (j.at("key") == key) return fairness::FairnessReport::from_json(j.at("report"));
    }
  }
  auto r = fairness::fairness_report(model, examples, vocabulary(), config_.execution);
  for (const auto& w : r.warnings) spdlog::warn("{}", w);
  Json j;
  j["key"] = key;
  j["split"] = split_name;
  j["config_digest"] = digest_;
  j["model_digest"] = r.model_digest;
  j["seed"] = seed;
  j["report"] = r.to_json();
  store.append(j);
  return r;
}

std::vector<attribution::AttributionRecord> Pipeline::attributions(
    const model::Classifier& model, const std::string& split_name, const std::vector<Method>& methods,
    std::uint64_t seed) {
  const auto& examples = split(split_name);
  const auto file = path("attributions/" + split_name + ".jsonl");
  std::filesystem::create_directories(file.parent_path());
  JsonlStore store(file);
  const std::string model_digest = model.digest();
  const std::string params_digest = config_.attribution.digest();

  std::map<std::string, attribution::AttributionRecord> have;
  std::set<Method> wanted(methods.begin(), methods.end());
  for (const auto& j : store.records()) {
    if (j.at("model_digest") != model_digest || j.at("params_digest") != params_digest) continue;
    auto r = attribution::AttributionRecord::from_json(j);
    if (wanted.contains(r.method)) have[r.example_id + "|" + method_name(r.method)] = std::move(r);
  }
  std::vector<Method> missing;
  for (auto m : methods) {
    const bool complete = std::all_of(examples.begin(), examples.end(), [&](const corpus::Example& e) {
      return have.contains(e.id + "|" + method_name(m));
    });
    if (!complete) missing.push_back(m);
  }
  if (!missing.empty()) {
    auto batch = attribution::batch_attribute(model, examples, missing, config_.attribution, config_.execution);
    for (const auto& f : batch.failures) {
      spdlog::warn("attribution {} / {} failed: {}", f.example_id, method_name(f.method), f.message);
    }
    for (auto& r : batch.records) {
      Json j = r.to_json();
      j["config_digest"] = digest_;
      j["seed"] = seed;
      store.append(j);
      have[r.example_id + "|" + method_name(r.method)] = std::move(r);
    }
  }
  std::vector<attribution::AttributionRecord> out;
  for (const auto& e : examples) {
    for (auto m : methods) {
      auto it = have.find(e.id + "|" + method_name(m));
      if (it != have.end()) out.push_back(it->second);
    }
  }
  return out;
}

bool Pipeline::append_audit(audit::AuditRecord record) {
  record.config_digest = digest_;
  audit::AuditStore store(path(kAudit));
  return store.append(record);
}

std::vector<audit::AuditRecord> Pipeline::audit_records() const {
  std::vector<audit::AuditRecord> out;
  if (!std::filesystem::exists(path(kAudit))) return out;
  for (auto& r : audit::AuditStore(path(kAudit)).records()) {
    if (r.config_digest == digest_) out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::vector<attribution::RelianceRecord> reliances_for(const std::vector<attribution::AttributionRecord>& records,
                                                       const std::vector<corpus::Example>& examples,
                                                       Method method) {
  std::map<std::string, const corpus::Example*> by_id;
  for (const auto& e : examples) by_id[e.id] = &e;
  std::vector<attribution::RelianceRecord> out;
  for (const auto& r : records) {
    if (r.method != method) continue;
    attribution::Attribution a;
    a.method = r.method;
    a.target = r.target;
    a.scores = r.scores;
    out.push_back(attribution::reliance(a, *by_id.at(r.example_id), r.prediction));
  }
  return out;
}

// Last record of `kind` per method, in order of first appearance.
std::vector<audit::AuditRecord> latest_by_method(const std::vector<audit::AuditRecord>& records,
                                                 audit::AuditKind kind) {
  std::vector<audit::AuditRecord> out;
  for (const auto& r : records) {
    if (r.kind != kind) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const audit::AuditRecord& o) { return o.method == r.method; });
    if (it == out.end()) {
      out.push_back(r);
    } else {
      *it = r;
    }
  }
  return out;
}

std::map<std::string, double> iu_map(const fairness::FairnessReport& r) {
  std::map<std::string, double> out;
  for (const auto& u : r.iu) out[u.example_id] = u.iu;
  return out;
}

}  // namespace

// ---- attribute / RQ1 ------------------------------------------------------

void Pipeline::attribute() {
  const auto entries = models("default");
  if (entries.empty()) throw DataError("no trained models; run train first");
  for (const auto& e : entries) {
    const auto m = load_model(e);
    report(m, "test", e.seed);
    const auto records = attributions(m, "test", config_.methods, e.seed);
    spdlog::info("attribute: {} has {} test attributions", e.run_id, records.size());
  }
}

std::vector<audit::AuditRecord> Pipeline::rq1_summaries(const model::Classifier& model, std::uint64_t seed,
                                                        const std::vector<Method>& methods) {
  const auto& test = split("test");
  const auto rep = report(model, "test", seed);
  const auto iu = iu_map(rep);
  const auto records = attributions(model, "test", methods, seed);
  std::vector<audit::AuditRecord> out;
  for (auto m : methods) {
    const auto rel = reliances_for(records, test, m);
    const auto fc = audit::fairness_correlation(rel, iu);
    auto recs = audit::rq1_records(fc, method_name(m), model.digest(), config_.bias_type, seed);
    for (auto& r : recs) {
      r.config_digest = digest_;
      append_audit(r);
    }
    out.push_back(recs.front());
  }
  return out;
}

void Pipeline::audit_rq1() {
  const auto file = path("attributions/test.jsonl");
  if (!std::filesystem::exists(file) || JsonlStore(file).size() == 0) {
    throw DataError("no attributions; run attribute first");
  }
  for (const auto& e : models("default")) {
    const auto m = load_model(e);
    for (const auto& r : rq1_summaries(m, e.seed, config_.methods)) {
      spdlog::info("rq1 {} seed {}: mean|r| {}", r.method, e.seed, format_value(r.stat("mean_abs_r")));
    }
  }
}

// ---- RQ3 ------------------------------------------------------------------

std::vector<ModelEntry> Pipeline::debiased_models(debias::DebiasMethod method, debias::SelectionMetric metric) {
  std::vector<ModelEntry> out;
  for (auto& e : models("debias")) {
    if (e.debias_method == debias::to_string(method) && e.selection_metric == debias::to_string(metric)) {
      out.push_back(std::move(e));
    }
  }
  return out;
}

void Pipeline::debias_rq3() {
  if (models("default").empty()) train();
  JsonlStore index(path(kModelIndex));
  std::vector<debias::ComparisonRow> rows;
  {
    std::vector<fairness::FairnessReport> reports;
    for (const auto& e : models("default")) reports.push_back(report(load_model(e), "test", e.seed));
    rows.push_back(debias::comparison_row("none", "-", 0.0, reports));
  }
  for (auto method : config_.debias_methods) {
    const std::string name(debias::to_string(method));
    bool done = !config_.selection_metrics.empty();
    for (auto metric : config_.selection_metrics) {
      done = done && debiased_models(method, metric).size() == config_.seeds.size();
    }
    if (!done) {
      debias::DebiasConfig dc;
      dc.method = method;
      dc.alpha_grid = config_.alpha_grid;
      dc.metrics = config_.selection_metrics;
      dc.seeds = config_.seeds;
      dc.fine_tune = config_.fine_tune;
      dc.fine_tune.execution = config_.execution;
      auto run = debias::train_debiased([this](std::uint64_t s) { return initial_model(s); }, split("train"),
                                        split("validation"), vocabulary(), dc);
      debias::save_debias_run(path("debias"), name, run);
      for (auto metric : config_.selection_metrics) {
        const auto& c = run.selected(metric);
        for (std::size_t s = 0; s < c.models.size(); ++s) {
          ModelEntry e;
          e.run_id = name + "/" + std::string(debias::to_string(metric)) + "-seed" + std::to_string(config_.seeds[s]);
          e.role = "debias";
          e.seed = config_.seeds[s];
          e.step = c.steps[s];
          e.model_digest = c.models[s].digest();
          e.debias_method = name;
          e.selection_metric = std::string(debias::to_string(metric));
          e.alpha = c.alpha;
          e.checkpoint = std::filesystem::relative(
                             model::CheckpointStore(path("debias/" + name))
                                 .path_for(e.selection_metric + "-seed" + std::to_string(e.seed), e.step),
                             config_.out)
                             .generic_string();
          index.append(e.to_json(digest_));
        }
      }
    }
    for (auto metric : config_.selection_metrics) {
      std::vector<fairness::FairnessReport> reports;
      double alpha = 0.0;
      for (const auto& e : debiased_models(method, metric)) {
        reports.push_back(report(load_model(e), "test", e.seed));
        alpha = e.alpha.value_or(0.0);
      }
      rows.push_back(debias::comparison_row(name, std::string(debias::to_string(metric)), alpha, reports));
      spdlog::info("rq3 {} / {}: alpha {} acc {:.2f} avg_iu {:.2f}", name, debias::to_string(metric), alpha,
                   rows.back().accuracy, rows.back().avg_iu);
    }
  }
  std::filesystem::create_directories(path("debias"));
  debias::save_comparison_table(path("debias/comparison.tsv"), rows);
}

// ---- fairwash -----------------------------------------------------------------

void Pipeline::fairwash() {
  const auto defaults = models("default");
  if (defaults.empty()) throw DataError("no trained models; run train first");
  std::vector<audit::AuditRecord> base;
  for (const auto& e : defaults) {
    for (auto& r : rq1_summaries(load_model(e), e.seed, config_.methods)) base.push_back(std::move(r));
  }
  const auto metric = std::find(config_.selection_metrics.begin(), config_.selection_metrics.end(),
                                debias::SelectionMetric::kAvgIu) != config_.selection_metrics.end()
                          ? debias::SelectionMetric::kAvgIu
                          : config_.selection_metrics.front();
  bool any = false;
  for (auto method : config_.debias_methods) {
    const auto entries = debiased_models(method, metric);
    if (entries.empty()) {
      spdlog::warn("fairwash: no {} models; run debias-rq3 first", debias::to_string(method));
      continue;
    }
    any = true;
    std::vector<audit::AuditRecord> after;
    std::vector<std::string> digests;
    for (const auto& e : entries) {
      digests.push_back(e.model_digest);
      for (auto& r : rq1_summaries(load_model(e), e.seed, config_.methods)) after.push_back(std::move(r));
    }
    for (const auto& d : audit::fairwash_delta(base, after)) {
      audit::AuditRecord r;
      r.kind = audit::AuditKind::kFairwash;
      r.method = std::string(debias::to_string(method)) + ":" + d.method;
      r.model_digest = digest_of_models(digests);
      r.bias_type = config_.bias_type;
      r.seed = config_.seeds.front();
      r.set("default_r", d.default_r).set("debiased_r", d.debiased_r).set("delta", d.delta);
      r.set("seeds", static_cast<double>(entries.size()));
      append_audit(r);
      spdlog::info("fairwash {}: {:+.3f}", r.method, d.delta);
    }
  }
  if (!any) throw DataError("no debiased models; run debias-rq3 first");
}

// ---- RQ2 ------------------------------------------------------------------------

void Pipeline::select_rq2() {
  auto entries = models();
  if (entries.size() < 3) {
    throw DataError("model selection needs at least 3 registered models, found " + std::to_string(entries.size()));
  }
  const auto& val = split("validation");
  const auto& vocab = vocabulary();
  std::map<std::string, std::size_t> available = corpus::group_counts(val);
  std::size_t per_group = config_.validation_size() / std::max<std::size_t>(vocab.groups().size(), 1);
  for (const auto& g : vocab.groups()) {
    const std::size_t have = available.count(g) ? available.at(g) : 0;
    if (have < per_group) {
      spdlog::warn("select-rq2: group {} has {} validation examples; resampling {} per group", g, have, have);
      per_group = have;
    }
  }
  if (per_group == 0) throw DataError("validation split has an empty group");

  std::vector<std::vector<std::string>> resample_ids;
  for (int r = 0; r < config_.validation_resamples; ++r) {
    std::vector<std::string> ids;
    for (const auto& e : corpus::balanced_sample(val, per_group, derive_seed(0, "rq2-resample", std::to_string(r)),
                                                 vocab.groups())) {
      ids.push_back(e.id);
    }
    resample_ids.push_back(std::move(ids));
  }

  const std::size_t k = entries.size();
  std::vector<double> test_iu(k);
  std::vector<std::map<std::string, double>> val_iu(k);
  std::vector<std::map<Method, std::map<std::string, double>>> abs_rel(k);
  std::vector<std::string> digests;
  for (std::size_t i = 0; i < k; ++i) {
    const auto m = load_model(entries[i]);
    digests.push_back(entries[i].model_digest);
    test_iu[i] = report(m, "test", entries[i].seed).avg_iu;
    val_iu[i] = iu_map(report(m, "validation", entries[i].seed));
    const auto records = attributions(m, "validation", config_.methods, entries[i].seed);
    for (auto method : config_.methods) {
      for (const auto& r : reliances_for(records, val, method)) abs_rel[i][method][r.example_id] = std::abs(r.reliance);
    }
  }
  auto subset_mean = [](const std::map<std::string, double>& values, const std::vector<std::string>& ids) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& id : ids) {
      auto it = values.find(id);
      if (it != values.end()) {
        total += it->second;
        ++n;
      }
    }
    return n ? total / static_cast<double>(n) : 0.0;
  };
  for (auto method : config_.methods) {
    audit::SelectionInput in;
    for (const auto& e : entries) in.candidates.push_back(e.run_id);
    in.test_avg_iu = test_iu;
    for (const auto& ids : resample_ids) {
      std::vector<double> ex(k), bl(k);
      for (std::size_t i = 0; i < k; ++i) {
        ex[i] = subset_mean(abs_rel[i][method], ids);
        bl[i] = 100.0 * subset_mean(val_iu[i], ids);
      }
      in.explanation.push_back(ex);
      in.baseline.push_back(bl);
    }
    const auto res = audit::select_models(in);
    audit::AuditRecord r;
    r.kind = audit::AuditKind::kRq2;
    r.method = method_name(method);
    r.model_digest = digest_of_models(digests);
    r.bias_type = config_.bias_type;
    r.seed = config_.seeds.front();
    r.set("rho", res.rho).set("mrr", res.mrr).set("baseline_rho", res.baseline_rho);
    r.set("baseline_mrr", res.baseline_mrr).set("resamples", static_cast<double>(res.resamples));
    r.set("candidates", static_cast<double>(k));
    append_audit(r);
    spdlog::info("rq2 {}: rho {} mrr {:.3f} (baseline rho {} mrr {:.3f})", r.method, format_value(res.rho),
                 res.mrr, format_value(res.baseline_rho), res.baseline_mrr);
  }
}

// ---- faithfulness ----------------------------------------------------------------

void Pipeline::faithfulness() {
  const auto entries = models("default");
  if (entries.empty()) throw DataError("no trained models; run train first");
  const auto& test = split("test");
  auto record_for = [&](const std::string& method, const ModelEntry& e, const audit::FaithfulnessResult& f) {
    audit::AuditRecord r;
    r.kind = audit::AuditKind::kFaithfulness;
    r.method = method;
    r.model_digest = e.model_digest;
    r.bias_type = config_.bias_type;
    r.seed = e.seed;
    r.set("comp_aopc", f.comp_aopc).set("suff_aopc", f.suff_aopc);
    for (std::size_t i = 0; i < f.ratios.size(); ++i) {
      const auto pct = std::to_string(static_cast<int>(std::lround(f.ratios[i] * 100)));
      r.set("comp_" + pct, f.comprehensiveness[i]).set("suff_" + pct, f.sufficiency[i]);
    }
    r.set("examples", static_cast<double>(f.examples));
    return r;
  };
  for (const auto& e : entries) {
    const auto m = load_model(e);
    const auto records = attributions(m, "test", config_.methods, e.seed);
    for (auto method : config_.methods) {
      std::map<std::string, const std::vector<double>*> by_id;
      for (const auto& r : records) {
        if (r.method == method) by_id[r.example_id] = &r.scores;
      }
      std::vector<corpus::Example> covered;
      std::vector<std::vector<double>> scores;
      for (const auto& ex : test) {
        auto it = by_id.find(ex.id);
        if (it == by_id.end()) continue;
        covered.push_back(ex);
        scores.push_back(*it->second);
      }
      if (covered.empty()) continue;
      const auto f = audit::faithfulness(m, covered, scores, config_.faithfulness_ratios, config_.execution);
      append_audit(record_for(method_name(method), e, f));
    }
    // Uniform-random scores as a reference point.
    std::vector<double> comp, suff;
    audit::FaithfulnessResult mean;
    for (int s = 0; s < config_.random_baseline_seeds; ++s) {
      std::mt19937_64 rng(derive_seed(e.seed, "random-attribution", std::to_string(s)));
      std::vector<std::vector<double>> scores;
      for (const auto& ex : test) {
        std::vector<double> v(std::min(ex.tokens.size(), m.max_length()));
        for (auto& x : v) x = uniform_unit(rng);
        scores.push_back(std::move(v));
      }
      auto f = audit::faithfulness(m, test, scores, config_.faithfulness_ratios, config_.execution);
      if (s == 0) {
        mean = f;
      } else {
        for (std::size_t i = 0; i < f.ratios.size(); ++i) {
          mean.comprehensiveness[i] += f.comprehensiveness[i];
          mean.sufficiency[i] += f.sufficiency[i];
        }
        mean.comp_aopc += f.comp_aopc;
        mean.suff_aopc += f.suff_aopc;
      }
    }
    const double n = config_.random_baseline_seeds;
    for (auto& v : mean.comprehensiveness) v /= n;
    for (auto& v : mean.sufficiency) v /= n;
    mean.comp_aopc /= n;
    mean.suff_aopc /= n;
    append_audit(record_for("random", e, mean));
  }
}

// ---- LLM judge ------------------------------------------------------------------

void Pipeline::llm_judge() {
  const auto entries = models("default");
  if (entries.empty()) throw DataError("no trained models; run train first");
  const auto& test = split("test");
  const auto& vocab = vocabulary();
  std::set<std::string> terms;
  for (const auto& t : vocab.all_terms()) terms.insert(t);
  const Method baseline_method = attribution::method_from_string(config_.judge.baseline_method);
  for (const auto& e : entries) {
    std::shared_ptr<const model::LanguageModelBackend> backend;
    std::shared_ptr<model::ReplayBackend> replay;
    if (config_.judge.replay) {
      replay = std::make_shared<model::ReplayBackend>(*config_.judge.replay);
      backend = replay;
    } else {
      backend = std::make_shared<model::ReferenceBackedBackend>(load_model(e), terms,
                                                                config_.judge.reflection_threshold);
    }
    model::PromptTemplate prompt;
    prompt.bias_type = config_.bias_type;
    prompt.num_tokens = config_.judge.num_tokens;
    const model::PromptedDecoder decoder(backend, prompt);
    for (auto mode : {audit::JudgeMode::kSelfReflection, audit::JudgeMode::kSelfAttribution}) {
      const auto rep = audit::llm_judge(decoder, test, mode, vocab, config_.judge.num_tokens, config_.execution);
      auto r = rep.to_record(decoder.digest(), config_.bias_type, e.seed);
      append_audit(r);
      spdlog::info("llm-judge {} seed {}: biased {} / unbiased {}", rep.judge, e.seed,
                   format_value(rep.biased.avg_iu), format_value(rep.unbiased.avg_iu));
    }
    // Explanation-based reference: flag the examples with the largest reliance.
    const auto records = attributions(decoder, "test", {baseline_method}, e.seed);
    const auto rel = reliances_for(records, test, baseline_method);
    const auto iu = iu_map(report(decoder, "test", e.seed));
    std::vector<attribution::RelianceRecord> kept;
    std::vector<double> ius;
    for (const auto& r : rel) {
      auto it = iu.find(r.example_id);
      if (it == iu.end()) continue;
      kept.push_back(r);
      ius.push_back(it->second);
    }
    if (!kept.empty()) {
      const auto flags = audit::reliance_binary_baseline(kept, config_.judge.baseline_fraction);
      const auto rep = audit::judge_report("reliance_binary:" + method_name(baseline_method), flags, ius);
      append_audit(rep.to_record(decoder.digest(), config_.bias_type, e.seed));
    }
    if (replay && replay->missing_count() > 0) {
      std::filesystem::create_directories(path("judge"));
      replay->export_missing(path("judge/missing-seed" + std::to_string(e.seed) + ".jsonl"));
      spdlog::warn("llm-judge: {} prompts missing from the replay file", replay->missing_count());
    }
  }
}

// ---- plots ------------------------------------------------------------------------

void Pipeline::plot() {
  std::filesystem::create_directories(path("plots"));
  const auto records = audit_records();
  std::set<std::string> default_digests;
  for (const auto& e : models("default")) default_digests.insert(e.model_digest);

  // RQ1 correlation bars, averaged over default models.
  {
    std::map<std::string, std::vector<double>> r, sig;
    for (const auto& rec : records) {
      if (rec.kind != audit::AuditKind::kRq1 || rec.cell_group || !default_digests.contains(rec.model_digest)) continue;
      if (auto v = rec.stat("mean_abs_r")) r[rec.method].push_back(*v);
      if (auto s = rec.stat("significant"), ev = rec.stat("evaluated"); s && ev && *ev > 0) {
        sig[rec.method].push_back(*s / *ev);
      }
    }
    std::vector<std::string> labels;
    BarSeries bars{"mean |r|", {}};
    std::vector<std::vector<std::string>> rows;
    for (auto m : config_.methods) {
      const auto name = method_name(m);
      if (!r.contains(name)) continue;
      labels.push_back(name);
      bars.values.push_back(mean_of(r[name]));
      rows.push_back({name, format_value(mean_of(r[name])), format_value(mean_of(sig[name])),
                      std::to_string(r[name].size())});
    }
    write_table(path("plots/rq1_correlation.tsv"), {"method", "mean_abs_r", "significant_fraction", "models"}, rows);
    write_text(path("plots/rq1_correlation.svg"), bar_chart_svg("Fairness correlation (" + config_.bias_type + ")", labels, {bars}));
  }
  // RQ2 selection bars.
  {
    std::vector<std::string> labels;
    BarSeries rho{"Spearman rho", {}}, mrr{"MRR@1", {}}, brho{"baseline rho", {}}, bmrr{"baseline MRR@1", {}};
    std::vector<std::vector<std::string>> rows;
    for (const auto& rec : latest_by_method(records, audit::AuditKind::kRq2)) {
      labels.push_back(rec.method);
      rho.values.push_back(rec.stat("rho"));
      mrr.values.push_back(rec.stat("mrr"));
      brho.values.push_back(rec.stat("baseline_rho"));
      bmrr.values.push_back(rec.stat("baseline_mrr"));
      rows.push_back({rec.method, format_value(rec.stat("rho")), format_value(rec.stat("mrr")),
                      format_value(rec.stat("baseline_rho")), format_value(rec.stat("baseline_mrr"))});
    }
    write_table(path("plots/rq2_selection.tsv"), {"method", "rho", "mrr", "baseline_rho", "baseline_mrr"}, rows);
    write_text(path("plots/rq2_selection.svg"), bar_chart_svg("Model selection", labels, {rho, mrr, brho, bmrr}));
  }
  // RQ3 debias grid from the comparison table.
  {
    std::vector<std::string> row_names;
    std::vector<std::vector<std::optional<double>>> values;
    std::vector<std::vector<std::string>> rows;
    const std::vector<std::string> columns{"accuracy", "disp_acc", "disp_fpr", "disp_fnr", "avg_iu"};
    std::ifstream in(path("debias/comparison.tsv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, '\t')) cells.push_back(cell);
      if (cells.size() < 8) continue;
      row_names.push_back(cells[0] + " / " + cells[1]);
      std::vector<std::optional<double>> v;
      for (std::size_t c = 3; c < 8; ++c) {
        v.push_back(cells[c] == "NA" ? std::nullopt : std::optional<double>(std::stod(cells[c])));
      }
      values.push_back(v);
      rows.push_back(cells);
    }
    write_table(path("plots/rq3_debias_grid.tsv"),
                {"method", "selection_metric", "alpha", "accuracy", "disp_acc", "disp_fpr", "disp_fnr", "avg_iu"}, rows);
    write_text(path("plots/rq3_debias_grid.svg"), grid_svg("Explanation-based debiasing (test)", row_names, columns, values));
  }
  // Fairwash delta chart.
  {
    std::vector<std::string> labels;
    BarSeries delta{"debiased - default mean |r|", {}};
    std::vector<std::vector<std::string>> rows;
    for (const auto& rec : latest_by_method(records, audit::AuditKind::kFairwash)) {
      labels.push_back(rec.method);
      delta.values.push_back(rec.stat("delta"));
      rows.push_back({rec.method, format_value(rec.stat("default_r")), format_value(rec.stat("debiased_r")),
                      format_value(rec.stat("delta"))});
    }
    write_table(path("plots/fairwash_delta.tsv"), {"debias:detector", "default_r", "debiased_r", "delta"}, rows);
    write_text(path("plots/fairwash_delta.svg"), bar_chart_svg("Fairness correlation change after debiasing", labels, {delta}));
  }
}

// ---- planted bench ----------------------------------------------------------------

Json Pipeline::planted_bench() {
  if (!config_.planted) throw ConfigError("planted-bench needs a planted corpus section");
  for (const auto& sub : {"ingest", "train", "attribute", "audit-rq1", "debias-rq3", "fairwash", "faithfulness",
                          "llm-judge", "select-rq2", "plot"}) {
    run(sub);
  }
  const auto records = audit_records();
  std::set<std::string> default_digests;
  for (const auto& e : models("default")) default_digests.insert(e.model_digest);

  Json summary;
  summary["config_digest"] = digest_;
  std::map<std::string, std::vector<double>> rq1;
  for (const auto& r : records) {
    if (r.kind == audit::AuditKind::kRq1 && !r.cell_group && default_digests.contains(r.model_digest)) {
      if (auto v = r.stat("mean_abs_r")) rq1[r.method].push_back(*v);
    }
  }
  Json rq1_json = Json::object();
  for (auto m : config_.methods) {
    if (rq1.contains(method_name(m))) rq1_json[method_name(m)] = mean_of(rq1[method_name(m)]);
  }
  summary["rq1_mean_abs_r"] = rq1_json;
  Json fw = Json::object();
  for (const auto& r : latest_by_method(records, audit::AuditKind::kFairwash)) {
    fw[r.method] = r.stat("delta") ? Json(*r.stat("delta")) : Json(nullptr);
  }
  summary["fairwash_delta"] = fw;
  std::map<std::string, std::vector<double>> comp;
  for (const auto& r : records) {
    if (r.kind == audit::AuditKind::kFaithfulness) {
      if (auto v = r.stat("comp_aopc")) comp[r.method].push_back(*v);
    }
  }
  Json comp_json = Json::object();
  for (auto& [m, v] : comp) comp_json[m] = mean_of(v);
  summary["comprehensiveness"] = comp_json;
  Json judge = Json::object();
  for (const auto& r : records) {
    if (r.kind != audit::AuditKind::kLlmJudge) continue;
    judge[r.method + "/seed" + std::to_string(r.seed)] =
        Json{{"biased_avg_iu", r.stat("biased_avg_iu") ? Json(*r.stat("biased_avg_iu")) : Json(nullptr)},
             {"unbiased_avg_iu", r.stat("unbiased_avg_iu") ? Json(*r.stat("unbiased_avg_iu")) : Json(nullptr)}};
  }
  summary["llm_judge"] = judge;
  Json rq2 = Json::object();
  for (const auto& r : latest_by_method(records, audit::AuditKind::kRq2)) {
    rq2[r.method] = Json{{"rho", r.stat("rho") ? Json(*r.stat("rho")) : Json(nullptr)}, {"mrr", *r.stat("mrr")}};
  }
  summary["rq2"] = rq2;
  std::ifstream in(path("debias/comparison.tsv"));
  std::stringstream buf;
  buf << in.rdbuf();
  summary["rq3_comparison"] = buf.str();
  write_text(path("planted_bench.json"), summary.dump(2) + "\n");
  return summary;
}

}  // namespace fairlens::runner
