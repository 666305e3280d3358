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

#include "fairlens/debias/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "fairlens/digest.hpp"
#include "fairlens/model/checkpoint.hpp"

namespace fairlens::debias {

namespace {

constexpr std::array<std::pair<SelectionMetric, std::string_view>, 4> kMetrics{{
    {SelectionMetric::kDispAcc, "disp_acc"},
    {SelectionMetric::kDispFpr, "disp_fpr"},
    {SelectionMetric::kDispFnr, "disp_fnr"},
    {SelectionMetric::kAvgIu, "avg_iu"},
}};

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> mean_defined(const std::vector<std::optional<double>>& values) {
  double total = 0.0;
  int n = 0;
  for (const auto& v : values) {
    if (v) {
      total += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return total / n;
}

}  // namespace

const std::vector<SelectionMetric>& all_selection_metrics() {
  static const std::vector<SelectionMetric> metrics = [] {
    std::vector<SelectionMetric> out;
    for (const auto& [m, _] : kMetrics) out.push_back(m);
    return out;
  }();
  return metrics;
}

std::string_view to_string(SelectionMetric m) {
  for (const auto& [metric, name] : kMetrics) {
    if (metric == m) return name;
  }
  return "unknown";
}

SelectionMetric selection_metric_from_string(std::string_view name) {
  for (const auto& [metric, n] : kMetrics) {
    if (n == name) return metric;
  }
  throw ConfigError("unknown selection metric: " + std::string(name));
}

double harmonic_metric(double accuracy, double unfairness) {
  const double a = accuracy;
  const double b = 100.0 - std::clamp(unfairness, 0.0, 100.0);
  if (a + b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

double unfairness_of(const fairness::FairnessReport& report, SelectionMetric metric) {
  switch (metric) {
    case SelectionMetric::kDispAcc:
      return report.disp_acc;
    case SelectionMetric::kDispFpr:
      return report.disp_fpr.value_or(100.0);
    case SelectionMetric::kDispFnr:
      return report.disp_fnr.value_or(100.0);
    case SelectionMetric::kAvgIu:
      return report.avg_iu;
  }
  return 100.0;
}

std::string DebiasConfig::digest() const {
  DigestBuilder b;
  b.add(to_string(method));
  for (double a : alpha_grid) b.add(a);
  for (auto m : metrics) b.add(to_string(m));
  for (auto s : seeds) b.add(static_cast<std::int64_t>(s));
  const auto& f = fine_tune;
  b.add(std::int64_t{f.epochs}).add(std::int64_t{f.batch_size}).add(f.learning_rate);
  b.add(f.warmup_fraction).add(f.weight_decay).add(f.max_grad_norm);
  b.add(f.dropout_override.value_or(-1.0)).add(static_cast<std::int64_t>(f.seed));
  return b.finish();
}

model::FineTuneConfig seeded_fine_tune(const model::FineTuneConfig& base, std::uint64_t seed) {
  model::FineTuneConfig fc = base;
  fc.seed = derive_seed(base.seed, "seed", std::to_string(seed));
  return fc;
}

const AlphaCandidate& DebiasRun::selected(SelectionMetric metric) const {
  const AlphaCandidate* best = nullptr;
  for (const auto& c : candidates) {
    if (c.metric != metric) continue;
    if (!best || c.score > best->score || (c.score == best->score && c.alpha < best->alpha)) best = &c;
  }
  if (!best) throw NumericalError("no finite candidate for " + std::string(to_string(metric)));
  return *best;
}

const AlphaCandidate& DebiasRun::candidate(double alpha, SelectionMetric metric) const {
  for (const auto& c : candidates) {
    if (c.metric == metric && c.alpha == alpha) return c;
  }
  throw ConfigError("no candidate for alpha " + std::to_string(alpha));
}

Json DebiasRun::manifest() const {
  Json j;
  j["method"] = std::string(to_string(config.method));
  j["config_digest"] = config.digest();
  j["alpha_grid"] = config.alpha_grid;
  j["seeds"] = config.seeds;
  Json metrics = Json::array();
  for (auto m : config.metrics) metrics.push_back(std::string(to_string(m)));
  j["metrics"] = metrics;
  Json traj = Json::array();
  for (const auto& r : trajectory) {
    Json e;
    e["seed"] = r.seed;
    e["alpha"] = r.alpha;
    e["epoch"] = r.epoch;
    e["step"] = r.step;
    e["accuracy"] = r.accuracy;
    e["disp_acc"] = r.disp_acc;
    e["disp_fpr"] = opt(r.disp_fpr);
    e["disp_fnr"] = opt(r.disp_fnr);
    e["avg_iu"] = r.avg_iu;
    e["model_digest"] = r.model_digest;
    e["harmonic"] = r.harmonic;
    traj.push_back(e);
  }
  j["trajectory"] = traj;
  Json sel = Json::object();
  for (auto m : config.metrics) {
    const auto& c = selected(m);
    Json s;
    s["alpha"] = c.alpha;
    s["score"] = c.score;
    s["epochs"] = c.epochs;
    s["steps"] = c.steps;
    Json digests = Json::array();
    for (const auto& model : c.models) digests.push_back(model.digest());
    s["checkpoint_digests"] = digests;
    sel[std::string(to_string(m))] = s;
  }
  j["selected"] = sel;
  j["diverged"] = diverged;
  return j;
}

DebiasRun train_debiased(const ModelFactory& factory, const std::vector<corpus::Example>& train,
                         const std::vector<corpus::Example>& validation,
                         const corpus::GroupVocabulary& vocab, const DebiasConfig& config) {
  if (config.alpha_grid.empty()) throw ConfigError("empty alpha grid");
  if (config.seeds.empty()) throw ConfigError("no seeds");
  if (config.metrics.empty()) throw ConfigError("no selection metrics");
  for (double a : config.alpha_grid) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("alpha must be finite and >= 0");
  }
  const std::size_t nm = config.metrics.size();
  DebiasRun run;
  run.config = config;

  // best[(alpha index, metric index)][seed index]
  struct Best {
    double score = -1.0;
    int epoch = 0;
    int step = 0;
    std::optional<model::ReferenceModel> model;
  };
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Best>> best;

  const auto steps_per_epoch = static_cast<int>(
      (train.size() + static_cast<std::size_t>(config.fine_tune.batch_size) - 1) /
      static_cast<std::size_t>(std::max(config.fine_tune.batch_size, 1)));

  for (std::size_t si = 0; si < config.seeds.size(); ++si) {
    const auto seed = config.seeds[si];
    const auto initial = factory(seed);
    for (std::size_t ai = 0; ai < config.alpha_grid.size(); ++ai) {
      const double alpha = config.alpha_grid[ai];
      const model::FineTuneConfig fc = seeded_fine_tune(config.fine_tune, seed);
      model::FineTuneCallbacks callbacks;
      callbacks.regularizer = make_regularizer(config.method, alpha);
      callbacks.on_epoch_end = [&](int epoch, const model::ReferenceModel& m) {
        const auto report = fairness::fairness_report(m, validation, vocab, fc.execution);
        EpochRecord rec;
        rec.seed = seed;
        rec.alpha = alpha;
        rec.epoch = epoch;
        rec.step = epoch * steps_per_epoch;
        rec.accuracy = report.accuracy;
        rec.disp_acc = report.disp_acc;
        rec.disp_fpr = report.disp_fpr;
        rec.disp_fnr = report.disp_fnr;
        rec.avg_iu = report.avg_iu;
        rec.model_digest = report.model_digest;
        for (std::size_t mi = 0; mi < nm; ++mi) {
          const double hm =
              harmonic_metric(report.accuracy, unfairness_of(report, config.metrics[mi]));
          rec.harmonic.push_back(hm);
          auto& slots = best[{ai, mi}];
          slots.resize(config.seeds.size());
          if (hm > slots[si].score) slots[si] = Best{hm, epoch, rec.step, m};
        }
        spdlog::info("debias {} seed {} alpha {} epoch {}: acc {:.2f} avg_iu {:.2f}",
                     to_string(config.method), seed, alpha, epoch, rec.accuracy, rec.avg_iu);
        run.trajectory.push_back(std::move(rec));
      };
      const auto result = model::fine_tune(initial, train, fc, callbacks);
      if (result.diverged) run.diverged.push_back(std::to_string(seed) + "/" + Json(alpha).dump());
    }
  }

  for (std::size_t ai = 0; ai < config.alpha_grid.size(); ++ai) {
    for (std::size_t mi = 0; mi < nm; ++mi) {
      auto it = best.find({ai, mi});
      if (it == best.end()) continue;
      auto& slots = it->second;
      // A candidate needs a finite epoch for every seed.
      if (slots.size() != config.seeds.size() ||
          std::any_of(slots.begin(), slots.end(), [](const Best& b) { return !b.model; })) {
        continue;
      }
      AlphaCandidate c;
      c.alpha = config.alpha_grid[ai];
      c.metric = config.metrics[mi];
      for (auto& b : slots) {
        c.score += b.score;
        c.epochs.push_back(b.epoch);
        c.steps.push_back(b.step);
        c.models.push_back(std::move(*b.model));
      }
      c.score /= static_cast<double>(slots.size());
      run.candidates.push_back(std::move(c));
    }
  }
  if (run.candidates.empty()) {
    throw NumericalError("every alpha diverged before its first epoch; trajectory has " +
                         std::to_string(run.trajectory.size()) + " records");
  }
  return run;
}

void save_debias_run(const std::filesystem::path& root, const std::string& run_id,
                     const DebiasRun& run) {
  std::filesystem::create_directories(root / run_id);
  {
    std::ofstream out(root / run_id / "manifest.json");
    if (!out) throw DataError("cannot write debias manifest");
    out << run.manifest().dump(2) << '\n';
  }
  model::CheckpointStore store(root / run_id);
  for (auto m : run.config.metrics) {
    const auto& c = run.selected(m);
    for (std::size_t s = 0; s < c.models.size(); ++s) {
      store.save(std::string(to_string(m)) + "-seed" + std::to_string(run.config.seeds[s]),
                 c.steps[s], c.models[s]);
    }
  }
}

ComparisonRow comparison_row(const std::string& method, const std::string& metric, double alpha,
                             const std::vector<fairness::FairnessReport>& reports) {
  if (reports.empty()) throw ConfigError("comparison row needs reports");
  ComparisonRow row;
  row.method = method;
  row.metric = metric;
  row.alpha = alpha;
  std::vector<std::optional<double>> fpr, fnr;
  for (const auto& r : reports) {
    row.accuracy += r.accuracy;
    row.disp_acc += r.disp_acc;
    row.avg_iu += r.avg_iu;
    fpr.push_back(r.disp_fpr);
    fnr.push_back(r.disp_fnr);
  }
  const auto n = static_cast<double>(reports.size());
  row.accuracy /= n;
  row.disp_acc /= n;
  row.avg_iu /= n;
  row.disp_fpr = mean_defined(fpr);
  row.disp_fnr = mean_defined(fnr);
  return row;
}

void save_comparison_table(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "method\tselection_metric\talpha\taccuracy\tdisp_acc\tdisp_fpr\tdisp_fnr\tavg_iu\n";
  auto cell = [](const std::optional<double>& v) { return v ? Json(*v).dump() : std::string("NA"); };
  for (const auto& r : rows) {
    out << r.method << '\t' << r.metric << '\t' << Json(r.alpha).dump() << '\t'
        << Json(r.accuracy).dump() << '\t' << Json(r.disp_acc).dump() << '\t' << cell(r.disp_fpr)
        << '\t' << cell(r.disp_fnr) << '\t' << Json(r.avg_iu).dump() << '\n';
  }
}

}  // namespace fairlens::debias
