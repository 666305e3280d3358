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

#include "fairlens/model/fine_tune.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "fairlens/corpus/sampling.hpp"
#include "fairlens/digest.hpp"

namespace fairlens::model {

EncodedExample encode_example(const ReferenceModel& model, const corpus::Example& e) {
  EncodedExample out;
  auto tokens = model_input(model, e);
  out.ids = model.encode(tokens);
  out.label = e.label;
  for (int i : e.sensitive_token_indices()) {
    if (i < static_cast<int>(out.ids.size())) out.sensitive.push_back(i);
  }
  return out;
}

double learning_rate_at(int step, int total_steps, double warmup_fraction, double base_lr) {
  if (total_steps <= 0) return 0.0;
  const int warmup = static_cast<int>(std::lround(warmup_fraction * total_steps));
  if (warmup > 0 && step <= warmup) return base_lr * step / warmup;
  if (total_steps == warmup) return base_lr;
  return base_lr * std::max(0.0, static_cast<double>(total_steps - step) / (total_steps - warmup));
}

FineTuneResult fine_tune(const ReferenceModel& initial, const std::vector<corpus::Example>& train,
                         const FineTuneConfig& config, const FineTuneCallbacks& callbacks) {
  if (train.empty()) throw ConfigError("fine_tune: empty training set");
  if (config.batch_size <= 0) throw ConfigError("fine_tune: batch size must be positive");
  if (config.dropout_override && (*config.dropout_override < 0 || *config.dropout_override >= 1)) {
    throw ConfigError("fine_tune: dropout must lie in [0, 1)");
  }
  FineTuneResult result{initial, {}, 0, false};
  ReferenceModel& model = result.model;
  if (config.epochs <= 0) return result;

  std::vector<EncodedExample> data;
  data.reserve(train.size());
  for (const auto& e : train) data.push_back(encode_example(model, e));

  const std::size_t np = model.num_parameters();
  const int batches_per_epoch =
      static_cast<int>((data.size() + static_cast<std::size_t>(config.batch_size) - 1) /
                       static_cast<std::size_t>(config.batch_size));
  const int total_steps = batches_per_epoch * config.epochs;
  std::vector<double> m1(np, 0.0), m2(np, 0.0);
  std::vector<double> last_finite(model.parameters().begin(), model.parameters().end());
  const double dropout = config.dropout_override.value_or(0.0);

  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    corpus::seeded_shuffle(order, derive_seed(config.seed, "epoch", std::to_string(epoch)));

    for (int b = 0; b < batches_per_epoch; ++b) {
      ++step;
      const std::size_t begin = static_cast<std::size_t>(b) * static_cast<std::size_t>(config.batch_size);
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const std::size_t bs = end - begin;
      std::vector<std::vector<double>> slot_grads(bs);
      std::vector<double> slot_loss(bs, 0.0);

      for_each_index(bs, config.execution, [&](std::size_t k) {
        const auto& ex = data[order[begin + k]];
        auto& g = slot_grads[k];
        g.assign(np, 0.0);
        std::optional<DropoutMasks> masks;
        if (dropout > 0) {
          std::mt19937_64 rng(derive_seed(config.seed, "dropout",
                                          std::to_string(step) + "/" + std::to_string(k)));
          masks = model.sample_dropout(static_cast<int>(ex.ids.size()), dropout, rng);
        }
        auto cache = model.forward(model.lookup(ex.ids), masks ? &*masks : nullptr);
        const auto& p = cache.probs;
        const double p_gold = p[ex.label];
        double loss = -std::log(std::max(p_gold, 1e-300));
        // d(-log p_y)/dz = p - onehot(y)
        BackwardSeed seed{p.toxic - (ex.label == Label::kToxic ? 1.0 : 0.0),
                          p.non_toxic - (ex.label == Label::kNonToxic ? 1.0 : 0.0)};
        Matrix dx = model.backward(cache, seed, g);
        model.scatter_embedding_grad(ex.ids, dx, g);
        if (callbacks.regularizer) loss += callbacks.regularizer(model, ex, cache, g);
        slot_loss[k] = loss;
      });

      std::vector<double> grad(np, 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < bs; ++k) {
        batch_loss += slot_loss[k];
        for (std::size_t i = 0; i < np; ++i) grad[i] += slot_grads[k][i];
      }
      batch_loss /= static_cast<double>(bs);
      double norm = 0.0;
      for (auto& v : grad) {
        v /= static_cast<double>(bs);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      result.step_losses.push_back(batch_loss);
      spdlog::debug("step {} loss {:.6f} grad_norm {:.4g}", step, batch_loss, norm);

      if (!std::isfinite(batch_loss) || !std::isfinite(norm)) {
        spdlog::warn("fine_tune: non-finite loss at step {}; restoring last finite parameters", step);
        std::copy(last_finite.begin(), last_finite.end(), model.parameters().begin());
        result.diverged = true;
        result.steps = step - 1;
        return result;
      }
      const double clip = (config.max_grad_norm > 0 && norm > config.max_grad_norm)
                              ? config.max_grad_norm / norm
                              : 1.0;
      const double lr = learning_rate_at(step, total_steps, config.warmup_fraction,
                                         config.learning_rate);
      const double bc1 = 1.0 - std::pow(config.adam_beta1, step);
      const double bc2 = 1.0 - std::pow(config.adam_beta2, step);
      auto params = model.parameters();
      for (std::size_t i = 0; i < np; ++i) {
        const double g = grad[i] * clip;
        m1[i] = config.adam_beta1 * m1[i] + (1 - config.adam_beta1) * g;
        m2[i] = config.adam_beta2 * m2[i] + (1 - config.adam_beta2) * g * g;
        const double update = (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + config.adam_epsilon);
        params[i] -= lr * (update + config.weight_decay * params[i]);
      }
      std::copy(params.begin(), params.end(), last_finite.begin());
    }
    if (callbacks.on_epoch_end) callbacks.on_epoch_end(epoch, model);
  }
  result.steps = step;
  return result;
}

}  // namespace fairlens::model
