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

#ifndef FAIRLENS_COMMON_HPP_
#define FAIRLENS_COMMON_HPP_

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fairlens {

// Binary toxicity label. The numeric value doubles as the class index into a
// probability pair.
enum class Label : int { kToxic = 0, kNonToxic = 1 };

inline constexpr int kNumClasses = 2;

inline constexpr int class_index(Label label) { return static_cast<int>(label); }
inline constexpr Label other(Label label) {
  return label == Label::kToxic ? Label::kNonToxic : Label::kToxic;
}

std::string_view to_string(Label label);
Label label_from_string(std::string_view text);

// (p_toxic, p_nontoxic). Components sum to one.
struct Probabilities {
  double toxic = 0.5;
  double non_toxic = 0.5;

  double operator[](Label c) const { return c == Label::kToxic ? toxic : non_toxic; }
  // Ties resolve to toxic.
  Label argmax() const { return toxic >= non_toxic ? Label::kToxic : Label::kNonToxic; }
};

// Two-way softmax over (z_toxic, z_nontoxic).
Probabilities softmax2(double z_toxic, double z_non_toxic);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or precondition violated by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (vocabularies, corpora, stores).
class DataError : public Error {
 public:
  using Error::Error;
};

// The model backend does not expose what an operation needs.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// A decoder continuation that could not be parsed. Carries the raw text.
class UnparseableError : public Error {
 public:
  explicit UnparseableError(std::string continuation)
      : Error("unparseable decoder answer: \"" + continuation + "\""),
        continuation_(std::move(continuation)) {}
  const std::string& continuation() const { return continuation_; }

 private:
  std::string continuation_;
};

}  // namespace fairlens

#endif  // FAIRLENS_COMMON_HPP_
