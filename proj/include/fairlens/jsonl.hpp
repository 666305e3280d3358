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

#ifndef FAIRLENS_JSONL_HPP_
#define FAIRLENS_JSONL_HPP_

#include <filesystem>
#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

namespace fairlens {

// Records keep insertion order so that serialized field order is stable.
using Json = nlohmann::ordered_json;

// Reads every non-empty line of a JSON-lines file. A line that fails to parse
// is passed to `on_error` (line number, message) and skipped; without a handler
// it throws DataError.
std::vector<Json> read_jsonl(
    const std::filesystem::path& path,
    const std::function<void(std::size_t, const std::string&)>& on_error = {});

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);

// Append-only JSON-lines store with idempotent keys. Every record must carry a
// string field "key"; appending a key that is already present is a no-op.
class JsonlStore {
 public:
  explicit JsonlStore(std::filesystem::path path);

  // Returns true if the record was written, false if its key already existed.
  bool append(const Json& record);
  bool contains(const std::string& key) const { return keys_.contains(key); }
  std::size_t size() const { return keys_.size(); }
  const std::filesystem::path& path() const { return path_; }

  std::vector<Json> records() const;

 private:
  std::filesystem::path path_;
  std::unordered_set<std::string> keys_;
};

}  // namespace fairlens

#endif  // FAIRLENS_JSONL_HPP_
