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

#include "fairlens/fairness/metrics.hpp"

#include <cmath>
#include <fstream>

#include <spdlog/spdlog.h>

#include "fairlens/digest.hpp"

namespace fairlens::fairness {

double disparity(const std::map<std::string, double>& per_group) {
  if (per_group.size() < 2) throw ConfigError("disparity needs at least two groups");
  double mean = 0.0;
  for (const auto& [_, v] : per_group) mean += v;
  mean /= static_cast<double>(per_group.size());
  double total = 0.0;
  for (const auto& [_, v] : per_group) total += std::abs(v - mean);
  return total;
}

double disparity(const std::map<std::string, double>& per_group,
                 const std::vector<std::string>& groups) {
  std::map<std::string, double> picked;
  for (const auto& g : groups) {
    auto it = per_group.find(g);
    if (it == per_group.end()) throw DataError("disparity: no value for group " + g);
    picked[g] = it->second;
  }
  return disparity(picked);
}

double individual_unfairness(const model::Classifier& model, const corpus::CounterfactualSet& cs) {
  if (cs.variants.empty()) {
    throw DataError("example " + cs.original.id + " has no counterfactual variants");
  }
  const auto p = model::predict_proba(model, cs.original);
  const Label y = p.argmax();
  double mean = 0.0;
  for (const auto& [_, v] : cs.variants) mean += model::predict_proba(model, v)[y];
  mean /= static_cast<double>(cs.variants.size());
  return std::abs(p[y] - mean);
}

std::string eval_set_digest(const std::vector<corpus::Example>& examples) {
  DigestBuilder b;
  for (const auto& e : examples) b.add(e.id).add(e.text);
  return b.finish();
}

namespace {

std::optional<double> rate(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> defined_disparity(const std::map<std::string, GroupMetrics>& groups,
                                        std::optional<double> GroupMetrics::*field,
                                        const char* name, std::vector<std::string>& warnings) {
  std::map<std::string, double> values;
  for (const auto& [g, m] : groups) {
    if ((m.*field).has_value()) {
      values[g] = *(m.*field);
    } else {
      warnings.push_back(std::string(name) + " undefined for group " + g + "; excluded");
    }
  }
  if (values.size() < 2) {
    warnings.push_back(std::string("disp_") + name + " undefined: fewer than two groups with a rate");
    return std::nullopt;
  }
  return disparity(values);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

FairnessReport fairness_report(const model::Classifier& model,
                               const std::vector<corpus::Example>& eval_set,
                               const corpus::GroupVocabulary& vocab, Execution exec) {
  FairnessReport r;
  r.bias_type = vocab.bias_type();
  r.model_digest = model.digest();
  r.eval_digest = eval_set_digest(eval_set);
  r.examples = eval_set.size();
  if (eval_set.empty()) throw DataError("fairness report on an empty evaluation set");

  const std::size_t n = eval_set.size();
  std::vector<Label> pred(n);
  std::vector<std::optional<double>> iu(n);
  std::vector<std::string> iu_error(n);
  for_each_index(n, exec, [&](std::size_t i) {
    pred[i] = model::predict_proba(model, eval_set[i]).argmax();
    try {
      iu[i] = individual_unfairness(model, corpus::counterfactuals(eval_set[i], vocab));
    } catch (const Error& err) {
      iu_error[i] = err.what();
    }
  });

  struct Counts {
    std::size_t n = 0, correct = 0, tp = 0, fp = 0, tn = 0, fn = 0;
  };
  std::map<std::string, Counts> counts;
  for (const auto& g : vocab.groups()) counts[g];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = counts[eval_set[i].group];
    const bool pos = eval_set[i].label == Label::kToxic;
    const bool pred_pos = pred[i] == Label::kToxic;
    ++c.n;
    if (pred[i] == eval_set[i].label) {
      ++c.correct;
      ++correct;
    }
    if (pos && pred_pos) ++c.tp;
    if (pos && !pred_pos) ++c.fn;
    if (!pos && pred_pos) ++c.fp;
    if (!pos && !pred_pos) ++c.tn;
  }
  r.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(n);

  std::size_t smallest = n, largest = 0;
  for (const auto& [g, c] : counts) {
    GroupMetrics m;
    m.count = c.n;
    m.acc = rate(c.correct, c.n);
    m.fpr = rate(c.fp, c.fp + c.tn);
    m.fnr = rate(c.fn, c.fn + c.tp);
    r.groups[g] = m;
    smallest = std::min(smallest, c.n);
    largest = std::max(largest, c.n);
  }
  if (smallest != largest) {
    r.warnings.push_back("evaluation set is not group-balanced");
  }
  auto acc = defined_disparity(r.groups, &GroupMetrics::acc, "acc", r.warnings);
  if (!acc) throw DataError("accuracy disparity needs at least two populated groups");
  r.disp_acc = *acc;
  r.disp_fpr = defined_disparity(r.groups, &GroupMetrics::fpr, "fpr", r.warnings);
  r.disp_fnr = defined_disparity(r.groups, &GroupMetrics::fnr, "fnr", r.warnings);

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!iu[i]) {
      ++r.iu_excluded;
      continue;
    }
    r.iu.push_back({eval_set[i].id, *iu[i]});
    total += *iu[i];
  }
  if (r.iu_excluded > 0) {
    r.warnings.push_back(std::to_string(r.iu_excluded) +
                         " examples excluded from IU: " + iu_error[0]);
  }
  r.avg_iu = r.iu.empty() ? 0.0 : 100.0 * total / static_cast<double>(r.iu.size());
  for (const auto& w : r.warnings) spdlog::warn("fairness report: {}", w);
  return r;
}

Json FairnessReport::to_json() const {
  Json j;
  j["bias_type"] = bias_type;
  j["model_digest"] = model_digest;
  j["eval_digest"] = eval_digest;
  j["examples"] = examples;
  j["accuracy"] = accuracy;
  Json g = Json::object();
  for (const auto& [name, m] : groups) {
    g[name] = {{"count", m.count},
               {"acc", optional_json(m.acc)},
               {"fpr", optional_json(m.fpr)},
               {"fnr", optional_json(m.fnr)}};
  }
  j["groups"] = g;
  j["disp_acc"] = disp_acc;
  j["disp_fpr"] = optional_json(disp_fpr);
  j["disp_fnr"] = optional_json(disp_fnr);
  Json list = Json::array();
  for (const auto& u : iu) list.push_back({{"id", u.example_id}, {"iu", u.iu}});
  j["iu"] = list;
  j["avg_iu"] = avg_iu;
  j["iu_excluded"] = iu_excluded;
  j["warnings"] = warnings;
  return j;
}

FairnessReport FairnessReport::from_json(const Json& j) {
  FairnessReport r;
  r.bias_type = j.at("bias_type").get<std::string>();
  r.model_digest = j.at("model_digest").get<std::string>();
  r.eval_digest = j.at("eval_digest").get<std::string>();
  r.examples = j.at("examples").get<std::size_t>();
  r.accuracy = j.at("accuracy").get<double>();
  for (const auto& [name, g] : j.at("groups").items()) {
    GroupMetrics m;
    m.count = g.at("count").get<std::size_t>();
    m.acc = optional_from(g, "acc");
    m.fpr = optional_from(g, "fpr");
    m.fnr = optional_from(g, "fnr");
    r.groups[name] = m;
  }
  r.disp_acc = j.at("disp_acc").get<double>();
  r.disp_fpr = optional_from(j, "disp_fpr");
  r.disp_fnr = optional_from(j, "disp_fnr");
  for (const auto& u : j.at("iu")) {
    r.iu.push_back({u.at("id").get<std::string>(), u.at("iu").get<double>()});
  }
  r.avg_iu = j.at("avg_iu").get<double>();
  r.iu_excluded = j.at("iu_excluded").get<std::size_t>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::vector<FairnessReport::Row> FairnessReport::table() const {
  std::vector<Row> rows;
  for (const auto& [g, m] : groups) {
    if (m.acc) rows.push_back({g, "acc", *m.acc});
    if (m.fpr) rows.push_back({g, "fpr", *m.fpr});
    if (m.fnr) rows.push_back({g, "fnr", *m.fnr});
  }
  rows.push_back({"all", "acc", accuracy});
  rows.push_back({"all", "disp_acc", disp_acc});
  if (disp_fpr) rows.push_back({"all", "disp_fpr", *disp_fpr});
  if (disp_fnr) rows.push_back({"all", "disp_fnr", *disp_fnr});
  rows.push_back({"all", "avg_iu", avg_iu});
  return rows;
}

void save_report(const std::filesystem::path& path, const FairnessReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << report.to_json().dump(2) << '\n';
}

FairnessReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return FairnessReport::from_json(Json::parse(in));
}

void save_report_table(const std::filesystem::path& path, const FairnessReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "group\tmetric\tvalue\n";
  for (const auto& row : report.table()) {
    out << row.group << '\t' << row.metric << '\t' << Json(row.value).dump() << '\n';
  }
}

}  // namespace fairlens::fairness
