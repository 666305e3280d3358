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

#include "fairlens/jsonl.hpp"

#include <fstream>

#include "fairlens/common.hpp"

namespace fairlens {

std::vector<Json> read_jsonl(const std::filesystem::path& path,
                             const std::function<void(std::size_t, const std::string&)>& on_error) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      if (!on_error) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      on_error(line_no, e.what());
    }
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
}

JsonlStore::JsonlStore(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    for (const auto& r : read_jsonl(path_)) {
      if (!r.contains("key")) throw DataError(path_.string() + ": record without key");
      keys_.insert(r.at("key").get<std::string>());
    }
  } else if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
}

bool JsonlStore::append(const Json& record) {
  if (!record.contains("key") || !record.at("key").is_string()) {
    throw ConfigError("store record needs a string \"key\" field");
  }
  auto key = record.at("key").get<std::string>();
  if (keys_.contains(key)) return false;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw DataError("cannot append to " + path_.string());
  out << record.dump() << '\n';
  keys_.insert(std::move(key));
  return true;
}

std::vector<Json> JsonlStore::records() const {
  if (!std::filesystem::exists(path_)) return {};
  return read_jsonl(path_);
}

}  // namespace fairlens
