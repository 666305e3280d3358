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

#ifndef FAIRLENS_DIGEST_HPP_
#define FAIRLENS_DIGEST_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace fairlens {

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// First 16 hex characters of the SHA-256. Used as a short content digest in
// persisted records.
std::string short_digest(std::string_view data);

// Incremental digest over heterogeneous fields. Field boundaries are encoded
// so that ("ab","c") and ("a","bc") hash differently.
class DigestBuilder {
 public:
  DigestBuilder& add(std::string_view field);
  DigestBuilder& add(double value);
  DigestBuilder& add(std::int64_t value);
  DigestBuilder& add(std::span<const double> values);
  std::string finish() const;

 private:
  std::string buffer_;
};

// 64-bit seed derived from a run seed and string keys (FNV-1a mixed with
// splitmix64). Stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::string_view key);
std::uint64_t derive_seed(std::uint64_t base, std::string_view key1, std::string_view key2);

// Unbiased integer in [0, n) by rejection. std::uniform_int_distribution is
// implementation-defined, so sampling paths that feed persisted stores use this.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

// Uniform double in [0, 1) with 53 random bits.
double uniform_unit(std::mt19937_64& rng);

}  // namespace fairlens

#endif  // FAIRLENS_DIGEST_HPP_
