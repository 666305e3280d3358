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

#include "fairlens/runner/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "fairlens/corpus/planted.hpp"
#include "fairlens/digest.hpp"

namespace fairlens::runner {

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "missing:" + path.string();
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

// Collects one problem per bad field instead of stopping at the first.
class Reader {
 public:
  Reader(const Json& root, std::filesystem::path base) : root_(root), base_(std::move(base)) {}

  const std::vector<std::string>& problems() const { return problems_; }
  void fail(const std::string& field, const std::string& what) { problems_.push_back(field + ": " + what); }

  const Json* find(const Json& obj, const std::string& key) const {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  template <typename T>
  void number(const Json& obj, const std::string& prefix, const std::string& key, T& out,
              std::optional<double> min = std::nullopt, bool exclusive = false) {
    const Json* v = find(obj, key);
    if (!v) return;
    const std::string field = prefix + key;
    if (!v->is_number()) return fail(field, "expected a number");
    const double d = v->get<double>();
    if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer() && !v->is_number_unsigned()) return fail(field, "expected an integer");
    }
    if (min && (exclusive ? !(d > *min) : !(d >= *min))) {
      return fail(field, std::string("must be ") + (exclusive ? "> " : ">= ") + Json(*min).dump());
    }
    out = v->get<T>();
  }

  void string(const Json& obj, const std::string& prefix, const std::string& key, std::string& out) {
    const Json* v = find(obj, key);
    if (!v) return;
    if (!v->is_string()) return fail(prefix + key, "expected a string");
    out = v->get<std::string>();
  }

  std::optional<std::filesystem::path> path(const Json& obj, const std::string& prefix,
                                            const std::string& key) {
    const Json* v = find(obj, key);
    if (!v || v->is_null()) return std::nullopt;
    if (!v->is_string()) {
      fail(prefix + key, "expected a path string");
      return std::nullopt;
    }
    std::filesystem::path p = v->get<std::string>();
    return p.is_relative() ? base_ / p : p;
  }

  void only(const Json& obj, const std::string& prefix, const std::set<std::string>& allowed) {
    for (const auto& [k, _] : obj.items()) {
      if (!allowed.contains(k)) fail(prefix + k, "unknown field");
    }
  }

  const Json& root() const { return root_; }

 private:
  const Json& root_;
  std::filesystem::path base_;
  std::vector<std::string> problems_;
};

Json path_json(const std::optional<std::filesystem::path>& p) {
  return p ? Json(p->generic_string()) : Json(nullptr);
}

std::string format_name(corpus::CorpusFormat f) {
  switch (f) {
    case corpus::CorpusFormat::kGeneric:
      return "generic";
    case corpus::CorpusFormat::kCivilComments:
      return "civil_comments";
    case corpus::CorpusFormat::kJigsaw:
      return "jigsaw";
  }
  return "generic";
}

}  // namespace

ConfigValidationError::ConfigValidationError(std::vector<std::string> problems)
    : ConfigError("invalid config:\n  " + join(problems, "\n  ")), problems_(std::move(problems)) {}

std::size_t RunConfig::validation_size() const {
  auto it = validation_sizes.find(bias_type);
  return it == validation_sizes.end() ? default_validation_size : it->second;
}

Json RunConfig::to_json() const {
  Json j;
  j["bias_type"] = bias_type;
  j["vocabulary"] = path_json(vocabulary);
  j["exclusions"] = path_json(exclusions);
  Json splits = Json::object();
  for (const auto& [name, src] : {std::pair{"train", &train}, std::pair{"validation", &validation},
                                  std::pair{"test", &test}}) {
    if (*src) splits[name] = Json{{"path", (*src)->path.generic_string()}, {"format", format_name((*src)->format)}};
  }
  j["corpus"] = splits;
  if (planted) {
    j["planted"] = Json{{"train", planted->train},
                        {"validation", planted->validation},
                        {"test", planted->test},
                        {"plant_rate", planted->plant_rate},
                        {"eval_plant_rate", planted->eval_plant_rate},
                        {"cue_reliability", planted->cue_reliability},
                        {"seed", planted->seed}};
  } else {
    j["planted"] = nullptr;
  }
  j["toxicity_threshold"] = toxicity_threshold;
  Json sizes = Json::object();
  for (const auto& [k, v] : validation_sizes) sizes[k] = v;
  j["validation_sizes"] = sizes;
  j["default_validation_size"] = default_validation_size;
  j["validation_resamples"] = validation_resamples;
  j["model"] = Json{{"dim", model.dim},           {"heads", model.heads},
                    {"layers", model.layers},     {"ff_dim", model.ff_dim},
                    {"max_length", model.max_length}, {"init_std", model.init_std}};
  j["train"] = Json{{"epochs", fine_tune.epochs},
                    {"batch_size", fine_tune.batch_size},
                    {"learning_rate", fine_tune.learning_rate},
                    {"warmup_fraction", fine_tune.warmup_fraction},
                    {"weight_decay", fine_tune.weight_decay},
                    {"max_grad_norm", fine_tune.max_grad_norm},
                    {"dropout", fine_tune.dropout_override ? Json(*fine_tune.dropout_override) : Json(nullptr)}};
  j["seeds"] = seeds;
  Json m = Json::array();
  for (auto x : methods) m.push_back(std::string(attribution::to_string(x)));
  j["methods"] = m;
  j["intgrad_steps"] = attribution.intgrad_steps;
  j["kernelshap_samples"] = attribution.kernelshap_samples;
  Json d = Json::array();
  for (auto x : debias_methods) d.push_back(std::string(debias::to_string(x)));
  j["debias_methods"] = d;
  j["alpha_grid"] = alpha_grid;
  Json sm = Json::array();
  for (auto x : selection_metrics) sm.push_back(std::string(debias::to_string(x)));
  j["selection_metrics"] = sm;
  j["faithfulness_ratios"] = faithfulness_ratios;
  j["random_baseline_seeds"] = random_baseline_seeds;
  j["judge"] = Json{{"replay", path_json(judge.replay)},
                    {"num_tokens", judge.num_tokens},
                    {"reflection_threshold", judge.reflection_threshold},
                    {"baseline_fraction", judge.baseline_fraction},
                    {"baseline_method", judge.baseline_method}};
  return j;
}

std::string RunConfig::digest() const {
  Json j = to_json();
  // Referenced files enter by content.
  auto by_content = [](Json& slot, const std::optional<std::filesystem::path>& p) {
    if (p) slot = file_digest(*p);
  };
  by_content(j["vocabulary"], vocabulary);
  by_content(j["exclusions"], exclusions);
  by_content(j["judge"]["replay"], judge.replay);
  for (const auto& [name, src] : {std::pair{"train", &train}, std::pair{"validation", &validation},
                                  std::pair{"test", &test}}) {
    if (*src) j["corpus"][name]["path"] = file_digest((*src)->path);
  }
  return short_digest(j.dump());
}

RunConfig parse_run_config(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigValidationError({"<root>: expected an object"});
  RunConfig c;
  c.methods = attribution::all_methods();
  c.debias_methods = debias::trainable_methods();
  Reader r(j, base_dir);
  r.only(j, "", {"out", "bias_type", "vocabulary", "exclusions", "corpus", "planted",
                 "toxicity_threshold", "validation_sizes", "default_validation_size",
                 "validation_resamples", "model", "train", "seeds", "methods", "intgrad_steps",
                 "kernelshap_samples", "attribution_seed", "debias_methods", "alpha_grid",
                 "selection_metrics", "faithfulness_ratios", "random_baseline_seeds", "judge",
                 "execution"});

  if (auto p = r.path(j, "", "out")) c.out = *p;
  r.string(j, "", "bias_type", c.bias_type);
  c.vocabulary = r.path(j, "", "vocabulary");
  c.exclusions = r.path(j, "", "exclusions");
  r.number(j, "", "toxicity_threshold", c.toxicity_threshold, 0.0);

  if (const Json* corpus = r.find(j, "corpus")) {
    if (!corpus->is_object()) {
      r.fail("corpus", "expected an object");
    } else {
      r.only(*corpus, "corpus.", {"train", "validation", "test"});
      for (const auto& [name, slot] : {std::pair{"train", &c.train}, std::pair{"validation", &c.validation},
                                       std::pair{"test", &c.test}}) {
        const Json* s = r.find(*corpus, name);
        if (!s) continue;
        const std::string prefix = std::string("corpus.") + name + ".";
        if (!s->is_object()) {
          r.fail(std::string("corpus.") + name, "expected {path, format}");
          continue;
        }
        SplitSource src;
        auto p = r.path(*s, prefix, "path");
        if (!p) {
          r.fail(prefix + "path", "required");
          continue;
        }
        src.path = *p;
        std::string format = "generic";
        r.string(*s, prefix, "format", format);
        try {
          src.format = corpus::corpus_format_from_string(format);
        } catch (const ConfigError& e) {
          r.fail(prefix + "format", e.what());
        }
        *slot = src;
      }
    }
  }

  if (const Json* p = r.find(j, "planted"); p && !p->is_null()) {
    if (!p->is_object()) {
      r.fail("planted", "expected an object");
    } else {
      PlantedSource ps;
      r.only(*p, "planted.", {"train", "validation", "test", "plant_rate", "eval_plant_rate",
                              "cue_reliability", "seed"});
      r.number(*p, "planted.", "train", ps.train, 2.0);
      r.number(*p, "planted.", "validation", ps.validation, 2.0);
      r.number(*p, "planted.", "test", ps.test, 2.0);
      r.number(*p, "planted.", "plant_rate", ps.plant_rate, 0.0);
      r.number(*p, "planted.", "eval_plant_rate", ps.eval_plant_rate, 0.0);
      r.number(*p, "planted.", "cue_reliability", ps.cue_reliability, 0.0);
      r.number(*p, "planted.", "seed", ps.seed);
      for (auto [name, v] : {std::pair{"plant_rate", ps.plant_rate}, std::pair{"eval_plant_rate", ps.eval_plant_rate},
                             std::pair{"cue_reliability", ps.cue_reliability}}) {
        if (v > 1.0) r.fail(std::string("planted.") + name, "must be <= 1");
      }
      c.planted = ps;
      if (!r.find(j, "bias_type")) c.bias_type = corpus::kPlantedBiasType;
    }
  }
  const bool any_split = c.train || c.validation || c.test;
  if (c.planted && any_split) r.fail("corpus", "give either corpus files or planted, not both");
  if (!c.planted) {
    if (!(c.train && c.validation && c.test)) r.fail("corpus", "train, validation and test are required without planted");
    if (!c.vocabulary) r.fail("vocabulary", "required with corpus files");
  }

  if (const Json* v = r.find(j, "validation_sizes")) {
    if (!v->is_object()) {
      r.fail("validation_sizes", "expected an object of bias_type -> size");
    } else {
      for (const auto& [k, val] : v->items()) {
        if (!val.is_number_unsigned()) {
          r.fail("validation_sizes." + k, "expected a non-negative integer");
        } else {
          c.validation_sizes[k] = val.get<std::size_t>();
        }
      }
    }
  }
  r.number(j, "", "default_validation_size", c.default_validation_size, 1.0);
  r.number(j, "", "validation_resamples", c.validation_resamples, 1.0);

  if (const Json* m = r.find(j, "model")) {
    if (!m->is_object()) {
      r.fail("model", "expected an object");
    } else {
      r.only(*m, "model.", {"kind", "dim", "heads", "layers", "ff_dim", "max_length", "init_std"});
      std::string kind = "reference";
      r.string(*m, "model.", "kind", kind);
      if (kind != "reference") r.fail("model.kind", "only \"reference\" models can be trained here");
      r.number(*m, "model.", "dim", c.model.dim, 1.0);
      r.number(*m, "model.", "heads", c.model.heads, 1.0);
      r.number(*m, "model.", "layers", c.model.layers, 1.0);
      r.number(*m, "model.", "ff_dim", c.model.ff_dim, 1.0);
      r.number(*m, "model.", "max_length", c.model.max_length, 2.0);
      r.number(*m, "model.", "init_std", c.model.init_std, 0.0, true);
      if (c.model.heads > 0 && c.model.dim % c.model.heads != 0) r.fail("model.heads", "must divide model.dim");
    }
  }
  if (const Json* t = r.find(j, "train")) {
    if (!t->is_object()) {
      r.fail("train", "expected an object");
    } else {
      auto& f = c.fine_tune;
      r.only(*t, "train.", {"epochs", "batch_size", "learning_rate", "warmup_fraction",
                            "weight_decay", "max_grad_norm", "dropout"});
      r.number(*t, "train.", "epochs", f.epochs, 1.0);
      r.number(*t, "train.", "batch_size", f.batch_size, 1.0);
      r.number(*t, "train.", "learning_rate", f.learning_rate, 0.0, true);
      r.number(*t, "train.", "warmup_fraction", f.warmup_fraction, 0.0);
      r.number(*t, "train.", "weight_decay", f.weight_decay, 0.0);
      r.number(*t, "train.", "max_grad_norm", f.max_grad_norm, 0.0);
      if (const Json* d = r.find(*t, "dropout"); d && !d->is_null()) {
        double p = 0.0;
        r.number(*t, "train.", "dropout", p, 0.0);
        if (p >= 1.0) r.fail("train.dropout", "must be < 1");
        f.dropout_override = p;
      }
    }
  }
  if (const Json* s = r.find(j, "seeds")) {
    if (!s->is_array() || s->empty()) {
      r.fail("seeds", "expected a non-empty array of integers");
    } else {
      c.seeds.clear();
      for (const auto& v : *s) {
        if (!v.is_number_unsigned()) {
          r.fail("seeds", "expected non-negative integers");
          break;
        }
        c.seeds.push_back(v.get<std::uint64_t>());
      }
    }
  }
  auto list = [&](const std::string& key, auto parse, auto& out) {
    const Json* v = r.find(j, key);
    if (!v) return;
    std::string text;
    if (v->is_string()) {
      text = v->get<std::string>();
    } else if (v->is_array()) {
      std::vector<std::string> items;
      for (const auto& x : *v) items.push_back(x.is_string() ? x.get<std::string>() : x.dump());
      text = join(items, ",");
    } else {
      return r.fail(key, "expected a list or comma-separated string");
    }
    try {
      out = parse(text);
    } catch (const ConfigError& e) {
      r.fail(key, e.what());
    }
  };
  list("methods", [](const std::string& t) { return attribution::methods_from_list(t); }, c.methods);
  list("debias_methods",
       [](const std::string& t) {
         if (t == "all") return debias::trainable_methods();
         std::vector<debias::DebiasMethod> out;
         for (const auto& n : split_list(t)) out.push_back(debias::debias_method_from_string(n));
         return out;
       },
       c.debias_methods);
  list("selection_metrics",
       [](const std::string& t) {
         if (t == "all") return debias::all_selection_metrics();
         std::vector<debias::SelectionMetric> out;
         for (const auto& n : split_list(t)) out.push_back(debias::selection_metric_from_string(n));
         return out;
       },
       c.selection_metrics);
  for (const char* key : {"alpha_grid", "faithfulness_ratios"}) {
    const Json* v = r.find(j, key);
    if (!v) continue;
    auto& out = std::string(key) == "alpha_grid" ? c.alpha_grid : c.faithfulness_ratios;
    if (!v->is_array() || v->empty()) {
      r.fail(key, "expected a non-empty array of numbers");
      continue;
    }
    out.clear();
    for (const auto& x : *v) {
      if (!x.is_number()) {
        r.fail(key, "expected numbers");
        break;
      }
      out.push_back(x.get<double>());
    }
  }
  for (double a : c.alpha_grid) {
    if (!(a >= 0.0)) r.fail("alpha_grid", "values must be >= 0");
  }
  for (double q : c.faithfulness_ratios) {
    if (!(q > 0.0 && q <= 1.0)) r.fail("faithfulness_ratios", "values must be in (0, 1]");
  }
  r.number(j, "", "intgrad_steps", c.attribution.intgrad_steps, 1.0);
  r.number(j, "", "kernelshap_samples", c.attribution.kernelshap_samples, 1.0);
  r.number(j, "", "attribution_seed", c.attribution.seed);
  r.number(j, "", "random_baseline_seeds", c.random_baseline_seeds, 1.0);
  if (const Json* jd = r.find(j, "judge")) {
    if (!jd->is_object()) {
      r.fail("judge", "expected an object");
    } else {
      r.only(*jd, "judge.", {"replay", "num_tokens", "reflection_threshold", "baseline_fraction",
                             "baseline_method"});
      c.judge.replay = r.path(*jd, "judge.", "replay");
      r.number(*jd, "judge.", "num_tokens", c.judge.num_tokens, 1.0);
      r.number(*jd, "judge.", "reflection_threshold", c.judge.reflection_threshold, 0.0);
      r.number(*jd, "judge.", "baseline_fraction", c.judge.baseline_fraction, 0.0);
      r.string(*jd, "judge.", "baseline_method", c.judge.baseline_method);
      try {
        attribution::method_from_string(c.judge.baseline_method);
      } catch (const ConfigError& e) {
        r.fail("judge.baseline_method", e.what());
      }
    }
  }
  if (const Json* e = r.find(j, "execution")) {
    try {
      c.execution = execution_from_string(e->get<std::string>());
    } catch (const std::exception& err) {
      r.fail("execution", err.what());
    }
  }
  if (!r.problems().empty()) throw ConfigValidationError(r.problems());
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigValidationError({path.string() + ": cannot open"});
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigValidationError({path.string() + ": " + e.what()});
  }
  return parse_run_config(j, path.parent_path());
}

void apply_overrides(RunConfig& config, const Overrides& o) {
  std::vector<std::string> problems;
  if (o.seed) config.seeds = {*o.seed};
  if (o.bias_type) config.bias_type = *o.bias_type;
  if (o.methods) {
    try {
      config.methods = attribution::methods_from_list(*o.methods);
    } catch (const ConfigError& e) {
      problems.push_back(std::string("--methods: ") + e.what());
    }
  }
  if (o.alpha_grid) {
    std::vector<double> grid;
    for (const auto& item : split_list(*o.alpha_grid)) {
      try {
        std::size_t used = 0;
        const double a = std::stod(item, &used);
        if (used != item.size() || !(a >= 0.0)) throw std::invalid_argument(item);
        grid.push_back(a);
      } catch (const std::exception&) {
        problems.push_back("--alpha-grid: bad value \"" + item + "\"");
      }
    }
    if (grid.empty()) problems.push_back("--alpha-grid: empty");
    config.alpha_grid = grid;
  }
  if (o.out) config.out = *o.out;
  if (!problems.empty()) throw ConfigValidationError(problems);
}

void validate_paths(const RunConfig& c) {
  std::vector<std::string> problems;
  auto check = [&](const std::string& field, const std::optional<std::filesystem::path>& p) {
    if (p && !std::filesystem::exists(*p)) problems.push_back(field + ": " + p->string() + " does not exist");
  };
  check("vocabulary", c.vocabulary);
  check("exclusions", c.exclusions);
  check("judge.replay", c.judge.replay);
  if (c.train) check("corpus.train.path", c.train->path);
  if (c.validation) check("corpus.validation.path", c.validation->path);
  if (c.test) check("corpus.test.path", c.test->path);
  if (!problems.empty()) throw ConfigValidationError(problems);
}

RunConfig planted_bench_config() {
  RunConfig c;
  c.out = "planted-bench";
  c.bias_type = corpus::kPlantedBiasType;
  PlantedSource p;
  p.train = 800;
  p.validation = 200;
  p.test = 200;
  c.planted = p;
  c.fine_tune.learning_rate = 1e-3;
  c.fine_tune.epochs = 5;
  c.seeds = {0, 1};
  c.default_validation_size = 100;
  c.validation_resamples = 3;
  c.methods = {attribution::Method::kAttention, attribution::Method::kAttnRollout,
               attribution::Method::kGradL2,    attribution::Method::kIxgL2,
               attribution::Method::kOcclusion, attribution::Method::kOcclusionAbs};
  c.debias_methods = {debias::DebiasMethod::kAttention, debias::DebiasMethod::kIxgL2};
  c.alpha_grid = {1.0, 10.0, 100.0};
  c.selection_metrics = {debias::SelectionMetric::kAvgIu, debias::SelectionMetric::kDispAcc};
  return c;
}

}  // namespace fairlens::runner
