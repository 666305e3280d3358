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

#ifndef FAIRLENS_RUNNER_CONFIG_HPP_
#define FAIRLENS_RUNNER_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairlens/attribution/attribution.hpp"
#include "fairlens/corpus/ingest.hpp"
#include "fairlens/debias/train.hpp"
#include "fairlens/jsonl.hpp"
#include "fairlens/model/fine_tune.hpp"
#include "fairlens/model/reference_model.hpp"
#include "fairlens/parallel.hpp"

namespace fairlens::runner {

struct SplitSource {
  std::filesystem::path path;
  corpus::CorpusFormat format = corpus::CorpusFormat::kGeneric;
};

// Synthetic corpus used when no split files are configured.
struct PlantedSource {
  std::size_t train = 1200;
  std::size_t validation = 200;
  std::size_t test = 200;
  double plant_rate = 0.8;
  // Validation and test sets carry no group signal by default.
  double eval_plant_rate = 0.5;
  double cue_reliability = 0.8;
  std::uint64_t seed = 0;
};

struct JudgeSettings {
  std::optional<std::filesystem::path> replay;  // recorded decoder answers
  int num_tokens = 5;
  double reflection_threshold = 0.1;
  double baseline_fraction = 0.5;
  std::string baseline_method = "occlusion";
};

struct RunConfig {
  // The reference model trains from scratch, so the default step size is
  // larger than the fine-tuning default.
  RunConfig() { fine_tune.learning_rate = 1e-3; }

  std::filesystem::path out = "fairlens-out";
  std::string bias_type = "planted";
  std::optional<std::filesystem::path> vocabulary;
  std::optional<std::filesystem::path> exclusions;
  std::optional<SplitSource> train, validation, test;
  std::optional<PlantedSource> planted;
  double toxicity_threshold = 0.5;

  std::map<std::string, std::size_t> validation_sizes{{"race", 500}, {"gender", 500}, {"religion", 200}};
  std::size_t default_validation_size = 200;
  int validation_resamples = 6;

  model::ReferenceConfig model;
  model::FineTuneConfig fine_tune;
  std::vector<std::uint64_t> seeds{0, 1, 2};

  std::vector<attribution::Method> methods;
  attribution::AttributionParams attribution;

  std::vector<debias::DebiasMethod> debias_methods;
  std::vector<double> alpha_grid = debias::kDefaultAlphaGrid;
  std::vector<debias::SelectionMetric> selection_metrics = debias::all_selection_metrics();

  std::vector<double> faithfulness_ratios{0.05, 0.10, 0.20, 0.50};
  int random_baseline_seeds = 20;
  JudgeSettings judge;
  Execution execution = Execution::kParallel;

  // Canonical form. Paths are recorded as given; the digest uses file
  // contents instead.
  Json to_json() const;
  // Independent of `out` and of where referenced files live.
  std::string digest() const;
  std::size_t validation_size() const;
};

// Command-line overrides applied after parsing.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> bias_type;
  std::optional<std::string> methods;     // "all" or comma list
  std::optional<std::string> alpha_grid;  // comma list
  std::optional<std::filesystem::path> out;
};

// Lists every invalid field, one "<field>: <problem>" per line.
class ConfigValidationError : public ConfigError {
 public:
  explicit ConfigValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Relative paths resolve against `base_dir`. Unknown top-level keys are
// rejected.
RunConfig parse_run_config(const Json& j, const std::filesystem::path& base_dir);
// JSON with // and /* */ comments allowed.
RunConfig load_run_config(const std::filesystem::path& path);
void apply_overrides(RunConfig& config, const Overrides& overrides);
// Checks that every referenced path exists.
void validate_paths(const RunConfig& config);

// Small planted benchmark sized to finish in a few CPU-minutes.
RunConfig planted_bench_config();

}  // namespace fairlens::runner

#endif  // FAIRLENS_RUNNER_CONFIG_HPP_
