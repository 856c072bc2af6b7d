// Copyright 2026 The HCEP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HCEP_CHECKPOINT_HPP_
#define HCEP_CHECKPOINT_HPP_

#include <filesystem>

#include "hcep/hierarchy.hpp"
#include "hcep/model.hpp"
#include "json.hpp"

namespace hcep {

// Checkpoint layout (all integers little-endian):
//   8 bytes  magic "HCEPCKPT"
//   u32      format version (1)
//   u64      header length N
//   N bytes  JSON header: {"net_config", "hierarchy", "hierarchy_hash", "meta",
//            "params": [{"name", "rows", "cols", "offset"}]}
//   float32 parameter data, row-major; "offset" counts floats from here.

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Atomic write. `meta` is stored verbatim. Throws IoError.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& meta = nlohmann::json::object());

/// Rebuilds the model from the stored config and hierarchy.
/// Throws MissingInputError, IoError (malformed file) or ConfigError.
Model load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

/// Same, and requires the stored hierarchy to hash like `expected`.
Model load_checkpoint(const std::filesystem::path& path, const ConceptHierarchy& expected,
                      nlohmann::json* meta = nullptr);

}  // namespace hcep

#endif  // HCEP_CHECKPOINT_HPP_
