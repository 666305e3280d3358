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

#ifndef FAIRLENS_ATTRIBUTION_KERNEL_SHAP_HPP_
#define FAIRLENS_ATTRIBUTION_KERNEL_SHAP_HPP_

#include <cstdint>
#include <functional>
#include <vector>

namespace fairlens::attribution {

// value(present) evaluates the model with the tokens where present[i] is
// false replaced. Returns one Shapley estimate per player; the estimates sum
// exactly to value(all) - value(none).
//
// When every non-trivial coalition fits in the budget (2^M - 2 <= samples)
// they are all enumerated with their exact Shapley-kernel weights and the
// result equals the exact Shapley values. Otherwise `samples` coalitions are
// drawn from the kernel distribution using `seed`.
std::vector<double> kernel_shap(std::size_t players,
                                const std::function<double(const std::vector<bool>&)>& value,
                                int samples, std::uint64_t seed);

}  // namespace fairlens::attribution

#endif  // FAIRLENS_ATTRIBUTION_KERNEL_SHAP_HPP_
