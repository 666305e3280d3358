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

#ifndef FAIRLENS_AUDIT_AUDIT_HPP_
#define FAIRLENS_AUDIT_AUDIT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairlens/attribution/attribution.hpp"
#include "fairlens/audit/statistics.hpp"
#include "fairlens/corpus/vocabulary.hpp"
#include "fairlens/jsonl.hpp"
#include "fairlens/model/decoder.hpp"
#include "fairlens/parallel.hpp"

namespace fairlens::audit {

enum class AuditKind { kRq1, kRq2, kFairwash, kFaithfulness, kLlmJudge };

std::string_view to_string(AuditKind kind);
AuditKind audit_kind_from_string(std::string_view name);

inline constexpr const char* kDefaultTimestamp = "1970-01-01T00:00:00Z";

// One persisted analysis result. Statistics keep insertion order; undefined
// values are stored as null.
struct AuditRecord {
  AuditKind kind = AuditKind::kRq1;
  std::string method;
  std::string model_digest;
  std::string config_digest;
  std::string bias_type;
  std::vector<std::pair<std::string, std::optional<double>>> stats;
  std::optional<Label> cell_class;
  std::optional<std::string> cell_group;
  std::uint64_t seed = 0;
  std::string timestamp = kDefaultTimestamp;

  AuditRecord& set(const std::string& name, std::optional<double> value);
  std::optional<double> stat(const std::string& name) const;

  // Throws DataError if a p-value leaves [0, 1] or a correlation [-1, 1].
  void validate() const;
  // Identity of the record in a store; independent of the statistics.
  std::string key() const;
  Json to_json() const;
  static AuditRecord from_json(const Json& j);
};

// Append-only record store. A record whose key is already present is not
// rewritten.
class AuditStore {
 public:
  explicit AuditStore(std::filesystem::path path) : store_(std::move(path)) {}
  bool append(const AuditRecord& record);
  std::vector<AuditRecord> records() const;
  std::size_t size() const { return store_.size(); }

 private:
  JsonlStore store_;
};

// ---- RQ1: fairness correlation ------------------------------------------

struct CellCorrelation {
  Label prediction = Label::kToxic;
  std::string group;
  std::size_t n = 0;
  std::optional<Correlation> correlation;  // unset when the cell was skipped
};

struct FairnessCorrelation {
  std::vector<CellCorrelation> cells;  // ordered by (class, group)
  std::size_t evaluated = 0;
  std::size_t skipped = 0;      // fewer than 3 examples or zero variance
  std::size_t significant = 0;  // evaluated cells with p < alpha
  std::size_t missing_iu = 0;   // reliance records without an IU value
  std::optional<double> mean_abs_r;  // cells weighted equally
};

// Cells are (predicted class, group). `iu` maps example id to IU.
FairnessCorrelation fairness_correlation(const std::vector<attribution::RelianceRecord>& reliances,
                                         const std::map<std::string, double>& iu,
                                         double alpha = 0.05);

// One summary record followed by one record per cell.
std::vector<AuditRecord> rq1_records(const FairnessCorrelation& fc, const std::string& method,
                                     const std::string& model_digest, const std::string& bias_type,
                                     std::uint64_t seed,
                                     const std::string& timestamp = kDefaultTimestamp);

// ---- RQ2: model selection ----------------------------------------------

struct RankingScore {
  std::optional<double> rho;
  double mrr = 0.0;
};

// Reciprocal rank, under ascending `predictor` (ties by index), of the
// candidate with the lowest `truth` (ties by index).
double mrr_at_1(std::span<const double> predictor, std::span<const double> truth);
RankingScore score_ranking(std::span<const double> predictor, std::span<const double> truth);

// explanation[s][k] / baseline[s][k]: predictor value of candidate k on
// validation resample s. Lower means predicted fairer.
struct SelectionInput {
  std::vector<std::string> candidates;
  std::vector<std::vector<double>> explanation;
  std::vector<std::vector<double>> baseline;
  std::vector<double> test_avg_iu;
};

struct SelectionResult {
  std::optional<double> rho;
  double mrr = 0.0;
  std::optional<double> baseline_rho;
  double baseline_mrr = 0.0;
  std::size_t resamples = 0;
};

SelectionResult select_models(const SelectionInput& input);

// Mean |reliance|: the explanation-based selection predictor.
double average_abs_reliance(const std::vector<attribution::RelianceRecord>& reliances);

// ---- Fairwashing ---------------------------------------------------------

struct FairwashDelta {
  std::string method;
  double default_r = 0.0;
  double debiased_r = 0.0;
  double delta = 0.0;  // debiased - default
};

// Uses the RQ1 summary records (those without a cell) of each run.
std::vector<FairwashDelta> fairwash_delta(const std::vector<AuditRecord>& default_rq1,
                                          const std::vector<AuditRecord>& debiased_rq1);
std::vector<FairwashDelta> fairwash_delta(const std::map<std::string, double>& default_r,
                                          const std::map<std::string, double>& debiased_r);

// ---- Faithfulness --------------------------------------------------------

inline const std::vector<double> kDefaultRatios{0.05, 0.10, 0.20, 0.50};

// max(1, floor(ratio * n)).
std::size_t tokens_for_ratio(std::size_t n, double ratio);
// Indices of the `m` highest scores; equal scores keep index order.
std::vector<std::size_t> top_tokens(std::span<const double> scores, std::size_t m);

struct FaithfulnessResult {
  std::vector<double> ratios;
  std::vector<double> comprehensiveness;  // per ratio, x100, mean over examples
  std::vector<double> sufficiency;
  double comp_aopc = 0.0;
  double suff_aopc = 0.0;
  std::size_t examples = 0;
};

// comp_k = f_c(x) - f_c(x with the top tokens replaced); suff_k = f_c(x) -
// f_c(x with every other token replaced). c is the prediction on x and the
// replacement is the model's mask/pad token. scores[i] scores examples[i].
FaithfulnessResult faithfulness(const model::Classifier& model,
                                const std::vector<corpus::Example>& examples,
                                const std::vector<std::vector<double>>& scores,
                                const std::vector<double>& ratios = kDefaultRatios,
                                Execution exec = Execution::kParallel);

// ---- LLM judge -----------------------------------------------------------

enum class JudgeMode { kSelfReflection, kSelfAttribution };

struct BucketStats {
  std::size_t count = 0;
  std::optional<double> avg_iu;  // x100; undefined for an empty bucket
};

struct JudgeReport {
  std::string judge;
  BucketStats biased;
  BucketStats unbiased;
  std::optional<double> correlation;  // point-biserial between flag and IU
  std::optional<double> p_value;
  std::size_t unparseable = 0;
  std::size_t excluded = 0;  // examples without an IU value

  Json to_json() const;
  AuditRecord to_record(const std::string& model_digest, const std::string& bias_type,
                        std::uint64_t seed, const std::string& timestamp = kDefaultTimestamp) const;
};

// Buckets IU (in [0, 1]) by a binary biased flag.
JudgeReport judge_report(const std::string& judge, const std::vector<bool>& biased,
                         const std::vector<double>& iu);

// Flags the top `fraction` of examples by |reliance|; ties at the boundary go
// to the smaller example id. Output is aligned with `reliances`.
std::vector<bool> reliance_binary_baseline(const std::vector<attribution::RelianceRecord>& reliances,
                                           double fraction = 0.5);

// Asks the decoder to judge its own predictions. IU is measured on the same
// decoder. Unparseable continuations are counted and excluded.
JudgeReport llm_judge(const model::PromptedDecoder& decoder,
                      const std::vector<corpus::Example>& examples, JudgeMode mode,
                      const corpus::GroupVocabulary& vocab, int num_tokens = 5,
                      Execution exec = Execution::kParallel);

// Whether a self-attribution word list names a sensitive term of `vocab`.
bool names_sensitive_term(const std::vector<std::string>& words, const corpus::GroupVocabulary& vocab);

}  // namespace fairlens::audit

#endif  // FAIRLENS_AUDIT_AUDIT_HPP_
