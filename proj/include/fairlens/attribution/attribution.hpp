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

#ifndef FAIRLENS_ATTRIBUTION_ATTRIBUTION_HPP_
#define FAIRLENS_ATTRIBUTION_ATTRIBUTION_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairlens/corpus/example.hpp"
#include "fairlens/model/classifier.hpp"
#include "fairlens/parallel.hpp"

namespace fairlens::attribution {

enum class Method {
  kAttention,
  kAttnRollout,
  kAttnFlow,
  kGradMean,
  kGradL2,
  kIxgMean,
  kIxgL2,
  kIntGradMean,
  kIntGradL2,
  kDeepLiftMean,
  kDeepLiftL2,
  kOcclusion,
  kOcclusionAbs,
  kKernelShap,
};

inline constexpr int kNumMethods = 14;

const std::vector<Method>& all_methods();
std::string_view to_string(Method m);
Method method_from_string(std::string_view name);
// Comma-separated names; "all" expands to every method.
std::vector<Method> methods_from_list(std::string_view list);

enum class Reduction { kNone, kMean, kL2 };
Reduction reduction_of(Method m);

bool is_attention_family(Method m);
// Methods built on input gradients (grad, ixg, intgrad).
bool needs_gradients(Method m);

struct AttributionParams {
  int intgrad_steps = 64;
  int kernelshap_samples = 200;
  std::uint64_t seed = 0;

  std::string digest() const;
};

struct Attribution {
  Method method = Method::kAttention;
  Label target = Label::kToxic;
  std::vector<double> scores;
  int steps = 0;    // intgrad only
  int samples = 0;  // kernelshap only
  std::string baseline_token;
};

// Per-token attribution of f_c for the (truncated) model input of `e`.
Attribution attribute(const model::Classifier& model, const corpus::Example& e, Label c,
                      Method method, const AttributionParams& params = {});

// Embedding-level attribution (n x d) before reduction, for the grad, ixg,
// intgrad and deeplift families.
model::Matrix attribute_dims(const model::Classifier& model, const corpus::Example& e, Label c,
                             Method method, const AttributionParams& params = {});

// Reduces an n x d attribution to one score per token.
std::vector<double> reduce(const model::Matrix& dims, Reduction r);

struct RelianceRecord {
  std::string example_id;
  Method method = Method::kAttention;
  Label target = Label::kToxic;
  double reliance = 0.0;
  int arg_token = -1;
  Label prediction = Label::kToxic;
  std::string group;
};

// Signed score of the sensitive token with the largest |score|; ties go to
// the lowest index. Only sensitive tokens inside the scored range count.
RelianceRecord reliance(const Attribution& attr, const corpus::Example& e,
                        std::optional<Label> prediction = std::nullopt);

// Attribution for one (example, method) pair together with its provenance.
struct AttributionRecord {
  std::string example_id;
  Method method = Method::kAttention;
  Label target = Label::kToxic;
  Label prediction = Label::kToxic;
  std::vector<double> scores;
  std::string params_digest;
  std::string model_digest;

  Json to_json() const;
  static AttributionRecord from_json(const Json& j);
  std::string key() const;
};

struct AttributionFailure {
  std::string example_id;
  Method method = Method::kAttention;
  std::string message;
};

struct AttributionBatch {
  std::vector<AttributionRecord> records;  // example-major, methods in input order
  std::vector<AttributionFailure> failures;
};

// Which class each example is explained for.
enum class TargetPolicy { kPredicted, kToxic, kGold };

AttributionBatch batch_attribute(const model::Classifier& model,
                                 const std::vector<corpus::Example>& examples,
                                 const std::vector<Method>& methods,
                                 const AttributionParams& params = {},
                                 Execution exec = Execution::kParallel,
                                 TargetPolicy policy = TargetPolicy::kPredicted);

void save_attributions(const std::filesystem::path& path,
                       const std::vector<AttributionRecord>& records);
std::vector<AttributionRecord> load_attributions(const std::filesystem::path& path);

}  // namespace fairlens::attribution

#endif  // FAIRLENS_ATTRIBUTION_ATTRIBUTION_HPP_
