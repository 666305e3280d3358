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

#include "fairlens/attribution/attribution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "fairlens/attribution/attention_paths.hpp"
#include "fairlens/attribution/kernel_shap.hpp"
#include "fairlens/digest.hpp"

namespace fairlens::attribution {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, kNumMethods> kNames{{
    {Method::kAttention, "attention"},
    {Method::kAttnRollout, "attn_rollout"},
    {Method::kAttnFlow, "attn_flow"},
    {Method::kGradMean, "grad_mean"},
    {Method::kGradL2, "grad_l2"},
    {Method::kIxgMean, "ixg_mean"},
    {Method::kIxgL2, "ixg_l2"},
    {Method::kIntGradMean, "intgrad_mean"},
    {Method::kIntGradL2, "intgrad_l2"},
    {Method::kDeepLiftMean, "deeplift_mean"},
    {Method::kDeepLiftL2, "deeplift_l2"},
    {Method::kOcclusion, "occlusion"},
    {Method::kOcclusionAbs, "occlusion_abs"},
    {Method::kKernelShap, "kernelshap"},
}};

std::vector<std::string> to_vector(std::span<const std::string> tokens) {
  return {tokens.begin(), tokens.end()};
}

model::Matrix baseline_embeddings(const model::Classifier& model, std::size_t n) {
  std::vector<std::string> base(n, model.replacement_token());
  return model.embeddings(base);
}

void require(bool ok, Method m, const char* what) {
  if (!ok) {
    throw CapabilityError(std::string(to_string(m)) + " needs " + what +
                          ", which this model does not expose");
  }
}

}  // namespace

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> out;
    for (const auto& [m, _] : kNames) out.push_back(m);
    return out;
  }();
  return methods;
}

std::string_view to_string(Method m) {
  for (const auto& [method, name] : kNames) {
    if (method == m) return name;
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (const auto& [method, n] : kNames) {
    if (n == name) return method;
  }
  throw ConfigError("unknown attribution method: " + std::string(name));
}

std::vector<Method> methods_from_list(std::string_view list) {
  if (list == "all") return all_methods();
  std::vector<Method> out;
  std::string item;
  std::istringstream in{std::string(list)};
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(method_from_string(item));
  }
  if (out.empty()) throw ConfigError("empty method list");
  return out;
}

Reduction reduction_of(Method m) {
  switch (m) {
    case Method::kGradMean:
    case Method::kIxgMean:
    case Method::kIntGradMean:
    case Method::kDeepLiftMean:
      return Reduction::kMean;
    case Method::kGradL2:
    case Method::kIxgL2:
    case Method::kIntGradL2:
    case Method::kDeepLiftL2:
      return Reduction::kL2;
    default:
      return Reduction::kNone;
  }
}

bool is_attention_family(Method m) {
  return m == Method::kAttention || m == Method::kAttnRollout || m == Method::kAttnFlow;
}

bool needs_gradients(Method m) {
  switch (m) {
    case Method::kGradMean:
    case Method::kGradL2:
    case Method::kIxgMean:
    case Method::kIxgL2:
    case Method::kIntGradMean:
    case Method::kIntGradL2:
      return true;
    default:
      return false;
  }
}

std::string AttributionParams::digest() const {
  return DigestBuilder()
      .add(static_cast<std::int64_t>(intgrad_steps))
      .add(static_cast<std::int64_t>(kernelshap_samples))
      .add(static_cast<std::int64_t>(seed))
      .finish();
}

std::vector<double> reduce(const model::Matrix& dims, Reduction r) {
  std::vector<double> out(static_cast<std::size_t>(dims.rows()));
  for (Eigen::Index i = 0; i < dims.rows(); ++i) {
    out[static_cast<std::size_t>(i)] =
        r == Reduction::kL2 ? dims.row(i).norm() : dims.row(i).mean();
  }
  return out;
}

model::Matrix attribute_dims(const model::Classifier& model, const corpus::Example& e, Label c,
                             Method method, const AttributionParams& params) {
  const auto caps = model.capabilities();
  const auto tokens = model::model_input(model, e);
  switch (method) {
    case Method::kGradMean:
    case Method::kGradL2:
    case Method::kIxgMean:
    case Method::kIxgL2: {
      require(caps.gradients_available, method, "gradients");
      const model::Matrix x = model.embeddings(tokens);
      const model::Matrix g = model.gradients_of(c, x);
      if (method == Method::kGradMean || method == Method::kGradL2) return g;
      return x.cwiseProduct(g);
    }
    case Method::kIntGradMean:
    case Method::kIntGradL2: {
      require(caps.gradients_available, method, "gradients");
      if (params.intgrad_steps < 1) throw ConfigError("intgrad steps must be positive");
      const model::Matrix x = model.embeddings(tokens);
      const model::Matrix x0 = baseline_embeddings(model, tokens.size());
      const model::Matrix delta = x - x0;
      model::Matrix avg = model::Matrix::Zero(x.rows(), x.cols());
      const int steps = params.intgrad_steps;
      for (int k = 0; k < steps; ++k) {
        const double alpha = (k + 0.5) / steps;
        avg += model.gradients_of(c, x0 + alpha * delta);
      }
      return delta.cwiseProduct(avg / static_cast<double>(steps));
    }
    case Method::kDeepLiftMean:
    case Method::kDeepLiftL2: {
      require(caps.deeplift_available, method, "DeepLift multipliers");
      const model::Matrix x = model.embeddings(tokens);
      const model::Matrix x0 = baseline_embeddings(model, tokens.size());
      return (x - x0).cwiseProduct(model.deeplift_multipliers(c, x, x0));
    }
    default:
      throw ConfigError(std::string(to_string(method)) + " has no embedding-level form");
  }
}

Attribution attribute(const model::Classifier& model, const corpus::Example& e, Label c,
                      Method method, const AttributionParams& params) {
  const auto caps = model.capabilities();
  const auto tokens = model::model_input(model, e);
  if (tokens.empty()) throw DataError("example " + e.id + " has no tokens");
  Attribution out;
  out.method = method;
  out.target = c;
  const auto agg = aggregation_for(model.kind());

  switch (method) {
    case Method::kAttention:
    case Method::kAttnRollout:
    case Method::kAttnFlow: {
      require(caps.attentions_available, method, "attention maps");
      const auto maps = model.attentions(tokens);
      Vector s = method == Method::kAttention     ? received_attention(maps, agg)
                 : method == Method::kAttnRollout ? rollout_scores(maps, agg)
                                                  : flow_scores(maps, agg);
      out.scores.assign(s.data(), s.data() + s.size());
      break;
    }
    case Method::kOcclusion:
    case Method::kOcclusionAbs: {
      const double full = model.predict_proba(tokens)[c];
      auto edited = to_vector(tokens);
      out.scores.resize(tokens.size());
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        edited[i] = caps.replacement_token(model.kind());
        const double a = full - model.predict_proba(edited)[c];
        edited[i] = tokens[i];
        out.scores[i] = method == Method::kOcclusionAbs ? std::abs(a) : a;
      }
      out.baseline_token = caps.replacement_token(model.kind());
      break;
    }
    case Method::kKernelShap: {
      const auto replacement = caps.replacement_token(model.kind());
      const auto base = to_vector(tokens);
      auto value = [&](const std::vector<bool>& present) {
        auto edited = base;
        for (std::size_t i = 0; i < edited.size(); ++i) {
          if (!present[i]) edited[i] = replacement;
        }
        return model.predict_proba(edited)[c];
      };
      const auto seed = derive_seed(params.seed, e.id, to_string(method));
      out.scores = kernel_shap(tokens.size(), value, params.kernelshap_samples, seed);
      out.samples = params.kernelshap_samples;
      out.baseline_token = replacement;
      break;
    }
    default: {
      out.scores = reduce(attribute_dims(model, e, c, method, params), reduction_of(method));
      if (method == Method::kIntGradMean || method == Method::kIntGradL2) {
        out.steps = params.intgrad_steps;
      }
      if (method != Method::kGradMean && method != Method::kGradL2 &&
          method != Method::kIxgMean && method != Method::kIxgL2) {
        out.baseline_token = caps.replacement_token(model.kind());
      }
      break;
    }
  }
  for (double s : out.scores) {
    if (!std::isfinite(s)) {
      throw NumericalError("non-finite " + std::string(to_string(method)) +
                           " score for example " + e.id);
    }
  }
  return out;
}

RelianceRecord reliance(const Attribution& attr, const corpus::Example& e,
                        std::optional<Label> prediction) {
  RelianceRecord r;
  r.example_id = e.id;
  r.method = attr.method;
  r.target = attr.target;
  r.prediction = prediction.value_or(attr.target);
  r.group = e.group;
  double best = -1.0;
  for (int j : e.sensitive_token_indices()) {
    if (j >= static_cast<int>(attr.scores.size())) break;
    const double a = attr.scores[static_cast<std::size_t>(j)];
    if (std::abs(a) > best) {
      best = std::abs(a);
      r.arg_token = j;
      r.reliance = a;
    }
  }
  if (r.arg_token < 0) {
    throw DataError("example " + e.id + " has no sensitive token inside the model input");
  }
  return r;
}

Json AttributionRecord::to_json() const {
  Json j;
  j["key"] = key();
  j["example_id"] = example_id;
  j["method"] = std::string(attribution::to_string(method));
  j["class"] = std::string(fairlens::to_string(target));
  j["prediction"] = std::string(fairlens::to_string(prediction));
  j["scores"] = scores;
  j["params_digest"] = params_digest;
  j["model_digest"] = model_digest;
  return j;
}

AttributionRecord AttributionRecord::from_json(const Json& j) {
  AttributionRecord r;
  r.example_id = j.at("example_id").get<std::string>();
  r.method = method_from_string(j.at("method").get<std::string>());
  r.target = label_from_string(j.at("class").get<std::string>());
  r.prediction = j.contains("prediction") ? label_from_string(j.at("prediction").get<std::string>())
                                          : r.target;
  r.scores = j.at("scores").get<std::vector<double>>();
  r.params_digest = j.at("params_digest").get<std::string>();
  r.model_digest = j.at("model_digest").get<std::string>();
  return r;
}

std::string AttributionRecord::key() const {
  return example_id + "|" + std::string(attribution::to_string(method)) + "|" +
         std::string(fairlens::to_string(target)) + "|" + model_digest + "|" + params_digest;
}

AttributionBatch batch_attribute(const model::Classifier& model,
                                 const std::vector<corpus::Example>& examples,
                                 const std::vector<Method>& methods,
                                 const AttributionParams& params, Execution exec,
                                 TargetPolicy policy) {
  const std::size_t m = methods.size();
  const std::size_t total = examples.size() * m;
  std::vector<std::optional<AttributionRecord>> slots(total);
  std::vector<std::string> errors(total);
  std::vector<Label> predictions(examples.size());
  for_each_index(examples.size(), exec, [&](std::size_t i) {
    predictions[i] = model::predict_proba(model, examples[i]).argmax();
  });
  const std::string params_digest = params.digest();
  const std::string model_digest = model.digest();

  for_each_index(total, exec, [&](std::size_t k) {
    const auto& e = examples[k / m];
    const Method method = methods[k % m];
    const Label pred = predictions[k / m];
    const Label target = policy == TargetPolicy::kPredicted ? pred
                         : policy == TargetPolicy::kToxic   ? Label::kToxic
                                                            : e.label;
    try {
      auto attr = attribute(model, e, target, method, params);
      AttributionRecord rec;
      rec.example_id = e.id;
      rec.method = method;
      rec.target = target;
      rec.prediction = pred;
      rec.scores = std::move(attr.scores);
      rec.params_digest = params_digest;
      rec.model_digest = model_digest;
      slots[k] = std::move(rec);
    } catch (const Error& err) {
      errors[k] = err.what();
    }
  });

  AttributionBatch batch;
  for (std::size_t k = 0; k < total; ++k) {
    if (slots[k]) {
      batch.records.push_back(std::move(*slots[k]));
    } else {
      batch.failures.push_back({examples[k / m].id, methods[k % m], errors[k]});
    }
  }
  if (!batch.failures.empty()) {
    spdlog::warn("attribution: {} of {} tasks failed", batch.failures.size(), total);
  }
  return batch;
}

void save_attributions(const std::filesystem::path& path,
                       const std::vector<AttributionRecord>& records) {
  std::vector<Json> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.to_json());
  write_jsonl(path, out);
}

std::vector<AttributionRecord> load_attributions(const std::filesystem::path& path) {
  std::vector<AttributionRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(AttributionRecord::from_json(j));
  return out;
}

}  // namespace fairlens::attribution
