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

#include <benchmark/benchmark.h>

#include "fairlens/attribution/attribution.hpp"
#include "fairlens/corpus/planted.hpp"
#include "fairlens/fairness/metrics.hpp"
#include "fairlens/model/fine_tune.hpp"
#include "fairlens/model/reference_model.hpp"

namespace {

using fairlens::Execution;

struct Fixture {
  std::vector<fairlens::corpus::Example> examples;
  fairlens::corpus::GroupVocabulary vocab;
  fairlens::model::ReferenceModel model;

  static const Fixture& get() {
    static const Fixture f = [] {
      auto examples = fairlens::corpus::generate_planted(64, {}, 7, "b");
      auto vocab = fairlens::corpus::planted_vocabulary();
      auto words = fairlens::model::ReferenceModel::build_vocabulary(examples, vocab.all_terms());
      auto model = fairlens::model::ReferenceModel::create(words, {}, 11);
      return Fixture{std::move(examples), std::move(vocab), std::move(model)};
    }();
    return f;
  }
};

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

void BM_BatchAttribute(benchmark::State& state) {
  const auto& f = Fixture::get();
  const std::vector<fairlens::attribution::Method> methods{fairlens::attribution::Method::kIxgL2,
                                                           fairlens::attribution::Method::kOcclusion};
  for (auto _ : state) {
    auto batch = fairlens::attribution::batch_attribute(f.model, f.examples, methods, {}, mode(state));
    benchmark::DoNotOptimize(batch.records.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.examples.size()));
}

void BM_FairnessReport(benchmark::State& state) {
  const auto& f = Fixture::get();
  for (auto _ : state) {
    auto r = fairlens::fairness::fairness_report(f.model, f.examples, f.vocab, mode(state));
    benchmark::DoNotOptimize(r.avg_iu);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.examples.size()));
}

void BM_FineTuneEpoch(benchmark::State& state) {
  const auto& f = Fixture::get();
  fairlens::model::FineTuneConfig config;
  config.epochs = 1;
  config.batch_size = 16;
  config.execution = mode(state);
  for (auto _ : state) {
    auto r = fairlens::model::fine_tune(f.model, f.examples, config);
    benchmark::DoNotOptimize(r.steps);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.examples.size()));
}

}  // namespace

BENCHMARK(BM_BatchAttribute)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FairnessReport)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FineTuneEpoch)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
