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

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "fairlens/runner/config.hpp"
#include "fairlens/runner/pipeline.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> bias_type;
  std::optional<std::string> methods;
  std::optional<std::string> alpha_grid;
  std::optional<std::string> out;
  bool quiet = false;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("-c,--config", f.config, "Run configuration (JSON, comments allowed)");
  sub->add_option("--seed", f.seed, "Run a single seed");
  sub->add_option("--bias-type", f.bias_type, "Bias type (race, gender, religion, planted)");
  sub->add_option("--methods", f.methods, "Attribution methods: all or a comma list");
  sub->add_option("--alpha-grid", f.alpha_grid, "Comma list of penalty weights");
  sub->add_option("--out", f.out, "Output directory");
  sub->add_flag("-q,--quiet", f.quiet, "Only log warnings and errors");
}

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d = {
      {"ingest", "Load or generate the corpus splits and the group vocabulary"},
      {"train", "Train the default classifier for every seed"},
      {"attribute", "Compute token attributions on the test split"},
      {"audit-rq1", "Correlate group reliance with individual unfairness"},
      {"select-rq2", "Rank models by explanation reliance on validation resamples"},
      {"debias-rq3", "Train with explanation penalties over the alpha grid"},
      {"faithfulness", "Comprehensiveness and sufficiency per attribution method"},
      {"llm-judge", "Prompted self-reflection and self-attribution judges"},
      {"fairwash", "Fairness correlation before and after debiasing"},
      {"plot", "Write TSV tables and SVG figures from the audit store"},
      {"planted-bench", "Run the whole chain on the synthetic planted benchmark"},
  };
  return d;
}

int run(const std::string& name, const Flags& f) {
  using namespace fairlens;
  runner::RunConfig config;
  if (!f.config.empty()) {
    config = runner::load_run_config(f.config);
  } else if (name == "planted-bench") {
    config = runner::planted_bench_config();
  } else {
    throw runner::ConfigValidationError({"--config: required for " + name});
  }
  runner::Overrides o;
  o.seed = f.seed;
  o.bias_type = f.bias_type;
  o.methods = f.methods;
  o.alpha_grid = f.alpha_grid;
  if (f.out) o.out = *f.out;
  runner::apply_overrides(config, o);
  runner::validate_paths(config);
  runner::Pipeline pipeline(std::move(config));
  if (name == "planted-bench") {
    std::cout << pipeline.planted_bench().dump(2) << "\n";
  } else {
    pipeline.run(name);
  }
  return EXIT_SUCCESS;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explanation-based fairness auditing for toxicity classifiers"};
  app.require_subcommand(1);
  Flags flags;
  for (const auto& name : fairlens::runner::subcommands()) add_flags(app.add_subcommand(name, descriptions().at(name)), flags);
  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  spdlog::set_level(flags.quiet ? spdlog::level::warn : spdlog::level::info);
  try {
    return run(name, flags);
  } catch (const fairlens::runner::ConfigValidationError& e) {
    std::cerr << "invalid configuration:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
    return 2;
  } catch (const fairlens::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
