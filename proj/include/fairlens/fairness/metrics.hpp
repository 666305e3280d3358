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

#ifndef FAIRLENS_FAIRNESS_METRICS_HPP_
#define FAIRLENS_FAIRNESS_METRICS_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairlens/corpus/counterfactual.hpp"
#include "fairlens/corpus/example.hpp"
#include "fairlens/corpus/vocabulary.hpp"
#include "fairlens/jsonl.hpp"
#include "fairlens/model/classifier.hpp"
#include "fairlens/parallel.hpp"

namespace fairlens::fairness {

// Sum over groups of |value_g - mean of values|. Needs at least two groups.
double disparity(const std::map<std::string, double>& per_group);

// Same, restricted to `groups`; throws DataError naming the first group that
// has no value.
double disparity(const std::map<std::string, double>& per_group,
                 const std::vector<std::string>& groups);

// |f_y(x) - mean_g' f_y(x^(g'))| with y the prediction on the original.
// In [0, 1].
double individual_unfairness(const model::Classifier& model, const corpus::CounterfactualSet& cs);

struct GroupMetrics {
  std::size_t count = 0;
  std::optional<double> acc;  // percent
  std::optional<double> fpr;  // percent; undefined without negatives
  std::optional<double> fnr;  // percent; undefined without positives
};

struct ExampleUnfairness {
  std::string example_id;
  double iu = 0.0;  // [0, 1]
};

// Toxic is the positive class throughout.
struct FairnessReport {
  std::string bias_type;
  std::string model_digest;
  std::string eval_digest;
  std::size_t examples = 0;
  double accuracy = 0.0;  // percent
  std::map<std::string, GroupMetrics> groups;
  double disp_acc = 0.0;
  std::optional<double> disp_fpr;
  std::optional<double> disp_fnr;
  std::vector<ExampleUnfairness> iu;
  double avg_iu = 0.0;          // mean IU x 100
  std::size_t iu_excluded = 0;  // examples whose counterfactuals failed
  std::vector<std::string> warnings;

  Json to_json() const;
  static FairnessReport from_json(const Json& j);

  // Long-format rows (group, metric, value); "all" holds the aggregates.
  struct Row {
    std::string group;
    std::string metric;
    double value = 0.0;
  };
  std::vector<Row> table() const;
};

// Digest of the ids and texts of an evaluation set.
std::string eval_set_digest(const std::vector<corpus::Example>& examples);

FairnessReport fairness_report(const model::Classifier& model,
                               const std::vector<corpus::Example>& eval_set,
                               const corpus::GroupVocabulary& vocab,
                               Execution exec = Execution::kParallel);

void save_report(const std::filesystem::path& path, const FairnessReport& report);
FairnessReport load_report(const std::filesystem::path& path);
// Tab-separated flat export of FairnessReport::table().
void save_report_table(const std::filesystem::path& path, const FairnessReport& report);

}  // namespace fairlens::fairness

#endif  // FAIRLENS_FAIRNESS_METRICS_HPP_
