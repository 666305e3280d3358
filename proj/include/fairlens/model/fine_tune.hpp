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

#ifndef FAIRLENS_MODEL_FINE_TUNE_HPP_
#define FAIRLENS_MODEL_FINE_TUNE_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fairlens/corpus/example.hpp"
#include "fairlens/model/reference_model.hpp"
#include "fairlens/parallel.hpp"

namespace fairlens::model {

// Example pre-encoded for the reference model.
struct EncodedExample {
  std::vector<int> ids;
  Label label = Label::kNonToxic;
  std::vector<int> sensitive;  // token indices inside sensitive spans
};

EncodedExample encode_example(const ReferenceModel& model, const corpus::Example& e);

// Additive per-example loss term. Receives the forward pass of the example
// (with the step's dropout masks, if any), returns the term's value and adds
// its parameter gradient into `grads`. The term is averaged over the batch
// like the task loss.
using RegularizerHook = std::function<double(const ReferenceModel& model, const EncodedExample& ex,
                                             const ForwardCache& cache, std::span<double> grads)>;

struct FineTuneConfig {
  int epochs = 5;
  int batch_size = 8;
  double learning_rate = 2e-5;
  double warmup_fraction = 0.1;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double max_grad_norm = 1.0;
  // Residual-branch dropout probability; unset means no dropout.
  std::optional<double> dropout_override;
  std::uint64_t seed = 0;
  Execution execution = Execution::kParallel;
};

// Linear warm-up to `base_lr` over the first round(warmup_fraction * total)
// steps, then linear decay to zero. Steps are 1-based.
double learning_rate_at(int step, int total_steps, double warmup_fraction, double base_lr);

struct FineTuneResult {
  ReferenceModel model;
  std::vector<double> step_losses;  // mean batch loss, task + regularizer
  int steps = 0;
  bool diverged = false;  // model holds the last finite parameters
};

struct FineTuneCallbacks {
  RegularizerHook regularizer;
  // Called after every epoch with the current parameters (1-based epoch).
  std::function<void(int epoch, const ReferenceModel& model)> on_epoch_end;
};

// AdamW with bias correction, global gradient-norm clipping and the warm-up
// schedule above. Deterministic for a given seed and thread count independent.
FineTuneResult fine_tune(const ReferenceModel& initial, const std::vector<corpus::Example>& train,
                         const FineTuneConfig& config, const FineTuneCallbacks& callbacks = {});

}  // namespace fairlens::model

#endif  // FAIRLENS_MODEL_FINE_TUNE_HPP_
