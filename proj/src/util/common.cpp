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

#include "fairlens/common.hpp"

#include <cmath>

namespace fairlens {

std::string_view to_string(Label label) {
  return label == Label::kToxic ? "toxic" : "non_toxic";
}

Label label_from_string(std::string_view text) {
  if (text == "toxic") return Label::kToxic;
  if (text == "non_toxic" || text == "non-toxic" || text == "nontoxic") return Label::kNonToxic;
  throw DataError("unknown label \"" + std::string(text) + "\"");
}

Probabilities softmax2(double z_toxic, double z_non_toxic) {
  // Logistic form keeps p_toxic + p_nontoxic == 1 up to one rounding.
  const double d = z_toxic - z_non_toxic;
  Probabilities p;
  if (d >= 0) {
    const double e = std::exp(-d);
    p.toxic = 1.0 / (1.0 + e);
    p.non_toxic = e / (1.0 + e);
  } else {
    const double e = std::exp(d);
    p.toxic = e / (1.0 + e);
    p.non_toxic = 1.0 / (1.0 + e);
  }
  return p;
}

}  // namespace fairlens

#include "fairlens/parallel.hpp"

namespace fairlens {

Execution execution_from_string(const std::string& name) {
  if (name == "serial") return Execution::kSerial;
  if (name == "parallel" || name == "openmp") return Execution::kParallel;
  throw ConfigError("unknown execution mode \"" + name + "\"");
}

}  // namespace fairlens
