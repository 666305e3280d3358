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

#include "fairlens/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <limits>
#include <memory>

#include "fairlens/common.hpp"

namespace fairlens {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

std::string short_digest(std::string_view data) { return sha256_hex(data).substr(0, 16); }

DigestBuilder& DigestBuilder::add(std::string_view field) {
  buffer_ += std::to_string(field.size());
  buffer_.push_back(':');
  buffer_.append(field);
  return *this;
}

DigestBuilder& DigestBuilder::add(double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  buffer_.push_back('d');
  buffer_.append(reinterpret_cast<const char*>(&bits), sizeof(bits));
  return *this;
}

DigestBuilder& DigestBuilder::add(std::int64_t value) {
  buffer_.push_back('i');
  buffer_.append(reinterpret_cast<const char*>(&value), sizeof(value));
  return *this;
}

DigestBuilder& DigestBuilder::add(std::span<const double> values) {
  add(static_cast<std::int64_t>(values.size()));
  buffer_.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  return *this;
}

std::string DigestBuilder::finish() const { return short_digest(buffer_); }

namespace {

std::uint64_t fnv1a(std::string_view key, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view key) {
  return splitmix64(base ^ fnv1a(key));
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view key1, std::string_view key2) {
  return splitmix64(derive_seed(base, key1) ^ fnv1a(key2, 0xcbf29ce484222325ULL ^ 0x5bd1e995ULL));
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw ConfigError("uniform_index: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace fairlens
