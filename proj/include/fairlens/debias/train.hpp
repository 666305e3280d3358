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

#ifndef FAIRLENS_DEBIAS_TRAIN_HPP_
#define FAIRLENS_DEBIAS_TRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairlens/corpus/vocabulary.hpp"
#include "fairlens/debias/penalty.hpp"
#include "fairlens/fairness/metrics.hpp"
#include "fairlens/jsonl.hpp"
#include "fairlens/model/fine_tune.hpp"

namespace fairlens::debias {

enum class SelectionMetric { kDispAcc, kDispFpr, kDispFnr, kAvgIu };

const std::vector<SelectionMetric>& all_selection_metrics();
std::string_view to_string(SelectionMetric m);
SelectionMetric selection_metric_from_string(std::string_view name);

// Harmonic mean of accuracy and 100 - clip(unfairness, 0, 100); 0 when both
// terms are 0.
double harmonic_metric(double accuracy, double unfairness);

// Unfairness value of a report under `metric`. An undefined disparity counts
// as maximally unfair (100).
double unfairness_of(const fairness::FairnessReport& report, SelectionMetric metric);

inline const std::vector<double> kDefaultAlphaGrid{0.01, 0.1, 1.0, 10.0, 100.0};

struct DebiasConfig {
  DebiasMethod method = DebiasMethod::kIxgL2;
  std::vector<double> alpha_grid = kDefaultAlphaGrid;
  std::vector<SelectionMetric> metrics = all_selection_metrics();
  std::vector<std::uint64_t> seeds{0, 1, 2};
  model::FineTuneConfig fine_tune;

  std::string digest() const;
};

// Validation evaluation at the end of one epoch of one (seed, alpha) job.
struct EpochRecord {
  std::uint64_t seed = 0;
  double alpha = 0.0;
  int epoch = 0;
  int step = 0;
  double accuracy = 0.0;
  double disp_acc = 0.0;
  std::optional<double> disp_fpr;
  std::optional<double> disp_fnr;
  double avg_iu = 0.0;
  std::string model_digest;
  std::vector<double> harmonic;  // aligned with DebiasConfig::metrics
};

// Best epoch of every seed at one alpha under one selection metric.
struct AlphaCandidate {
  double alpha = 0.0;
  SelectionMetric metric = SelectionMetric::kAvgIu;
  double score = 0.0;  // harmonic metric averaged over seeds
  std::vector<int> epochs;
  std::vector<int> steps;
  std::vector<model::ReferenceModel> models;  // one per seed
};

struct DebiasRun {
  DebiasConfig config;
  std::vector<EpochRecord> trajectory;
  std::vector<AlphaCandidate> candidates;  // every (alpha, metric) with a finite epoch
  std::vector<std::string> diverged;       // "seed/alpha" of jobs that hit a non-finite loss

  // Highest seed-averaged harmonic score for `metric`; ties go to the smaller
  // alpha.
  const AlphaCandidate& selected(SelectionMetric metric) const;
  const AlphaCandidate& candidate(double alpha, SelectionMetric metric) const;
  Json manifest() const;
};

// Fine-tuning settings for one seed. Plain and debiased runs of a seed share
// them, so alpha = 0 reproduces the plain model.
model::FineTuneConfig seeded_fine_tune(const model::FineTuneConfig& base, std::uint64_t seed);

using ModelFactory = std::function<model::ReferenceModel(std::uint64_t seed)>;

// Fine-tunes one model per (seed, alpha) with loss L_task + alpha * penalty,
// evaluates the validation set after every epoch and keeps, per selection
// metric, the epoch with the best harmonic score. Every alpha of a seed
// starts from factory(seed) with the same data order, so alpha = 0 is plain
// fine-tuning.
DebiasRun train_debiased(const ModelFactory& factory, const std::vector<corpus::Example>& train,
                         const std::vector<corpus::Example>& validation,
                         const corpus::GroupVocabulary& vocab, const DebiasConfig& config);

// Writes manifest.json and the selected checkpoints under root/<run_id>.
void save_debias_run(const std::filesystem::path& root, const std::string& run_id,
                     const DebiasRun& run);

// Seed-averaged test metrics of one selected configuration.
struct ComparisonRow {
  std::string method;
  std::string metric;
  double alpha = 0.0;
  double accuracy = 0.0;
  double disp_acc = 0.0;
  std::optional<double> disp_fpr;
  std::optional<double> disp_fnr;
  double avg_iu = 0.0;
};

ComparisonRow comparison_row(const std::string& method, const std::string& metric, double alpha,
                             const std::vector<fairness::FairnessReport>& reports);
void save_comparison_table(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows);

}  // namespace fairlens::debias

#endif  // FAIRLENS_DEBIAS_TRAIN_HPP_
