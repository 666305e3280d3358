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

#include "fairlens/model/checkpoint.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "fairlens/common.hpp"

namespace fairlens::model {

namespace {

constexpr char kMagic[8] = {'F', 'L', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    const int c = in.get();
    if (c == EOF) throw DataError("truncated checkpoint");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

void put_double(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(out, bits);
}

double get_double(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const ReferenceModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    const auto& c = model.config();
    for (int v : {c.dim, c.heads, c.layers, c.ff_dim, c.max_length}) {
      put_u64(out, static_cast<std::uint64_t>(v));
    }
    put_double(out, c.init_std);
    put_double(out, c.layer_norm_eps);
    put_u64(out, model.vocabulary().size());
    for (const auto& t : model.vocabulary()) {
      put_u64(out, t.size());
      out.write(t.data(), static_cast<std::streamsize>(t.size()));
    }
    put_u64(out, model.num_parameters());
    for (double p : model.parameters()) put_double(out, p);
  }
  std::filesystem::rename(tmp, path);
}

ReferenceModel read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, kMagic)) {
    throw DataError(path.string() + " is not a checkpoint");
  }
  ReferenceConfig c;
  c.dim = static_cast<int>(get_u64(in));
  c.heads = static_cast<int>(get_u64(in));
  c.layers = static_cast<int>(get_u64(in));
  c.ff_dim = static_cast<int>(get_u64(in));
  c.max_length = static_cast<int>(get_u64(in));
  c.init_std = get_double(in);
  c.layer_norm_eps = get_double(in);
  std::vector<std::string> vocab(get_u64(in));
  for (auto& t : vocab) {
    t.resize(get_u64(in));
    in.read(t.data(), static_cast<std::streamsize>(t.size()));
  }
  std::vector<double> params(get_u64(in));
  for (auto& p : params) p = get_double(in);
  if (!in) throw DataError("truncated checkpoint " + path.string());
  return ReferenceModel::from_parameters(std::move(vocab), c, std::move(params));
}

std::filesystem::path CheckpointStore::path_for(const std::string& run_id, int step) const {
  return root_ / run_id / ("step-" + std::to_string(step) + ".ckpt");
}

std::filesystem::path CheckpointStore::save(const std::string& run_id, int step,
                                            const ReferenceModel& model) const {
  auto path = path_for(run_id, step);
  write_checkpoint(path, model);
  return path;
}

ReferenceModel CheckpointStore::load(const std::string& run_id, int step) const {
  return read_checkpoint(path_for(run_id, step));
}

std::vector<int> CheckpointStore::steps(const std::string& run_id) const {
  std::vector<int> out;
  const auto dir = root_ / run_id;
  if (!std::filesystem::exists(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("step-") && name.ends_with(".ckpt")) {
      out.push_back(std::stoi(name.substr(5, name.size() - 10)));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fairlens::model
