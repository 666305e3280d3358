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

#include <array>
#include <cmath>

#include "fairlens/audit/audit.hpp"

namespace fairlens::audit {

namespace {

constexpr std::array<std::pair<AuditKind, std::string_view>, 5> kKinds{{
    {AuditKind::kRq1, "rq1"},
    {AuditKind::kRq2, "rq2"},
    {AuditKind::kFairwash, "fairwash"},
    {AuditKind::kFaithfulness, "faithfulness"},
    {AuditKind::kLlmJudge, "llm_judge"},
}};

bool is_p_value(const std::string& name) { return name == "p" || name.ends_with("_p"); }
bool is_correlation(const std::string& name) {
  return name == "r" || name == "rho" || name == "mean_abs_r" || name == "correlation" ||
         name.ends_with("_rho") || name.ends_with("_r");
}

}  // namespace

std::string_view to_string(AuditKind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "unknown";
}

AuditKind audit_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKinds) {
    if (n == name) return k;
  }
  throw DataError("unknown audit kind: " + std::string(name));
}

AuditRecord& AuditRecord::set(const std::string& name, std::optional<double> value) {
  for (auto& [n, v] : stats) {
    if (n == name) {
      v = value;
      return *this;
    }
  }
  stats.emplace_back(name, value);
  return *this;
}

std::optional<double> AuditRecord::stat(const std::string& name) const {
  for (const auto& [n, v] : stats) {
    if (n == name) return v;
  }
  return std::nullopt;
}

void AuditRecord::validate() const {
  for (const auto& [name, v] : stats) {
    if (!v) continue;
    if (!std::isfinite(*v)) throw DataError("audit statistic " + name + " is not finite");
    if (is_p_value(name) && (*v < 0.0 || *v > 1.0)) {
      throw DataError("p-value " + name + " outside [0, 1]");
    }
    if (is_correlation(name) && (*v < -1.0 - 1e-12 || *v > 1.0 + 1e-12)) {
      throw DataError("correlation " + name + " outside [-1, 1]");
    }
  }
}

std::string AuditRecord::key() const {
  std::string k = std::string(to_string(kind)) + "|" + method + "|" + model_digest + "|" +
                  config_digest + "|" + bias_type + "|" + std::to_string(seed);
  if (cell_class) k += "|" + std::string(fairlens::to_string(*cell_class));
  if (cell_group) k += "|" + *cell_group;
  return k;
}

Json AuditRecord::to_json() const {
  validate();
  Json j;
  j["key"] = key();
  j["kind"] = std::string(to_string(kind));
  j["method"] = method;
  j["model_digest"] = model_digest;
  j["config_digest"] = config_digest;
  j["bias_type"] = bias_type;
  Json s = Json::object();
  for (const auto& [n, v] : stats) s[n] = v ? Json(*v) : Json(nullptr);
  j["stats"] = s;
  if (cell_class || cell_group) {
    Json c = Json::object();
    if (cell_class) c["class"] = std::string(fairlens::to_string(*cell_class));
    if (cell_group) c["group"] = *cell_group;
    j["cell"] = c;
  }
  j["seed"] = seed;
  j["timestamp"] = timestamp;
  return j;
}

AuditRecord AuditRecord::from_json(const Json& j) {
  AuditRecord r;
  r.kind = audit_kind_from_string(j.at("kind").get<std::string>());
  r.method = j.at("method").get<std::string>();
  r.model_digest = j.at("model_digest").get<std::string>();
  r.config_digest = j.value("config_digest", std::string());
  r.bias_type = j.at("bias_type").get<std::string>();
  for (const auto& [n, v] : j.at("stats").items()) {
    r.stats.emplace_back(n, v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  }
  if (j.contains("cell")) {
    const auto& c = j.at("cell");
    if (c.contains("class")) r.cell_class = label_from_string(c.at("class").get<std::string>());
    if (c.contains("group")) r.cell_group = c.at("group").get<std::string>();
  }
  r.seed = j.at("seed").get<std::uint64_t>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.validate();
  return r;
}

bool AuditStore::append(const AuditRecord& record) { return store_.append(record.to_json()); }

std::vector<AuditRecord> AuditStore::records() const {
  std::vector<AuditRecord> out;
  for (const auto& j : store_.records()) out.push_back(AuditRecord::from_json(j));
  return out;
}

}  // namespace fairlens::audit
