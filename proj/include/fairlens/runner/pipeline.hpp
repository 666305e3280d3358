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

#ifndef FAIRLENS_RUNNER_PIPELINE_HPP_
#define FAIRLENS_RUNNER_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fairlens/attribution/attribution.hpp"
#include "fairlens/audit/audit.hpp"
#include "fairlens/corpus/example.hpp"
#include "fairlens/corpus/vocabulary.hpp"
#include "fairlens/fairness/metrics.hpp"
#include "fairlens/model/reference_model.hpp"
#include "fairlens/runner/config.hpp"

namespace fairlens::runner {

const std::vector<std::string>& subcommands();

// One trained model registered in the model index.
struct ModelEntry {
  std::string run_id;
  std::string role;  // "default" or "debias"
  std::uint64_t seed = 0;
  int step = 0;
  std::string model_digest;
  std::string debias_method;
  std::string selection_metric;
  std::optional<double> alpha;
  std::string checkpoint;  // relative to the output directory

  Json to_json(const std::string& config_digest) const;
  static ModelEntry from_json(const Json& j);
};

// Orchestrates the subcommands over stores under config.out:
//   config.json, data/, models/, attributions/, reports.jsonl, audit.jsonl,
//   debias/, judge/, plots/.
// Every subcommand computes only what its stores lack, so reruns with the
// same config add nothing.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);

  void run(const std::string& subcommand);

  void ingest();
  void train();
  void attribute();
  void audit_rq1();
  void select_rq2();
  void debias_rq3();
  void faithfulness();
  void llm_judge();
  void fairwash();
  void plot();
  // Full chain on the planted corpus; returns and writes a summary.
  Json planted_bench();

  const RunConfig& config() const { return config_; }
  const std::string& config_digest() const { return digest_; }

  // Store access, loading lazily.
  const std::vector<corpus::Example>& split(const std::string& name);
  const corpus::GroupVocabulary& vocabulary();
  std::vector<ModelEntry> models(const std::string& role = "") const;
  model::ReferenceModel load_model(const ModelEntry& entry) const;
  fairness::FairnessReport report(const model::Classifier& model, const std::string& split_name,
                                  std::uint64_t seed);
  std::vector<attribution::AttributionRecord> attributions(const model::Classifier& model,
                                                           const std::string& split_name,
                                                           const std::vector<attribution::Method>& methods,
                                                           std::uint64_t seed);
  // RQ1 summary records of `model` on the test split, computing missing ones.
  std::vector<audit::AuditRecord> rq1_summaries(const model::Classifier& model, std::uint64_t seed,
                                                const std::vector<attribution::Method>& methods);

 private:
  std::filesystem::path path(const std::string& relative) const { return config_.out / relative; }
  bool append_audit(audit::AuditRecord record);
  std::vector<audit::AuditRecord> audit_records() const;
  void write_config() const;
  model::ReferenceModel initial_model(std::uint64_t seed);
  std::vector<ModelEntry> debiased_models(debias::DebiasMethod method, debias::SelectionMetric metric);

  RunConfig config_;
  std::string digest_;
  std::map<std::string, std::vector<corpus::Example>> splits_;
  std::optional<corpus::GroupVocabulary> vocab_;
};

}  // namespace fairlens::runner

#endif  // FAIRLENS_RUNNER_PIPELINE_HPP_
