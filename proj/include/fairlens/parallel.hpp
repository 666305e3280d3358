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

#ifndef FAIRLENS_PARALLEL_HPP_
#define FAIRLENS_PARALLEL_HPP_

#include <cstddef>
#include <exception>
#include <string>
#include <vector>

namespace fairlens {

// Kernels that map over independent items come in two flavours: a serial
// reference loop and an OpenMP loop. Both write results into per-item slots
// and reduce in index order, so their outputs are bit-identical.
enum class Execution { kSerial, kParallel };

Execution execution_from_string(const std::string& name);

// Calls fn(i) for i in [0, n). An exception thrown by fn is rethrown after
// the loop; if several items throw, the lowest index wins.
template <typename Fn>
void for_each_index(std::size_t n, Execution exec, Fn&& fn) {
  if (exec == Execution::kSerial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace fairlens

#endif  // FAIRLENS_PARALLEL_HPP_
