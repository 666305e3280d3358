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

#ifndef FAIRLENS_CORPUS_SAMPLING_INL_HPP_
#define FAIRLENS_CORPUS_SAMPLING_INL_HPP_

#include <random>
#include <utility>

#include "fairlens/digest.hpp"

namespace fairlens::corpus {

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace fairlens::corpus

#endif  // FAIRLENS_CORPUS_SAMPLING_INL_HPP_
