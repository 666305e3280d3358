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

#ifndef FAIRLENS_CORPUS_SAMPLING_HPP_
#define FAIRLENS_CORPUS_SAMPLING_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairlens/corpus/example.hpp"
#include "fairlens/corpus/vocabulary.hpp"

namespace fairlens::corpus {

// Deterministic Fisher-Yates shuffle driven by `seed`.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed);

// Draws exactly `per_group_n` examples of every group, deterministic under
// `seed`. Groups default to those present in `examples` (first-appearance
// order). Output is grouped in group order; within a group, draw order.
// Throws DataError listing the deficit of every short group.
std::vector<Example> balanced_sample(const std::vector<Example>& examples, std::size_t per_group_n,
                                     std::uint64_t seed,
                                     std::span<const std::string> groups = {});

enum class DebiasTransform { kGroupBalance, kGroupClassBalance, kCda };

DebiasTransform debias_transform_from_string(const std::string& name);

struct DebiasTransformOptions {
  // Down-sample the output to the input size so debiased models see the same
  // number of examples as the default one.
  bool match_input_size = false;
};

// group_balance: subsample every group to the smallest group count.
// group_class_balance: subsample every (group, class) cell to the smallest
// cell count; an empty cell is an error.
// cda: originals followed by all counterfactual variants, labels copied.
std::vector<Example> debias_transform(const std::vector<Example>& examples, DebiasTransform kind,
                                      const GroupVocabulary& vocab, std::uint64_t seed,
                                      const DebiasTransformOptions& options = {});

}  // namespace fairlens::corpus

#include "fairlens/corpus/sampling_inl.hpp"

#endif  // FAIRLENS_CORPUS_SAMPLING_HPP_
