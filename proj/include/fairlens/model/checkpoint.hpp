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

#ifndef FAIRLENS_MODEL_CHECKPOINT_HPP_
#define FAIRLENS_MODEL_CHECKPOINT_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "fairlens/model/reference_model.hpp"

namespace fairlens::model {

// Snapshots live at <root>/<run_id>/step-<N>.ckpt. The format is a small
// binary header, the vocabulary and the raw little-endian parameters.
class CheckpointStore {
 public:
  explicit CheckpointStore(std::filesystem::path root) : root_(std::move(root)) {}

  std::filesystem::path save(const std::string& run_id, int step, const ReferenceModel& model) const;
  ReferenceModel load(const std::string& run_id, int step) const;
  // Steps available for a run, ascending.
  std::vector<int> steps(const std::string& run_id) const;
  std::filesystem::path path_for(const std::string& run_id, int step) const;

 private:
  std::filesystem::path root_;
};

void write_checkpoint(const std::filesystem::path& path, const ReferenceModel& model);
ReferenceModel read_checkpoint(const std::filesystem::path& path);

}  // namespace fairlens::model

#endif  // FAIRLENS_MODEL_CHECKPOINT_HPP_
