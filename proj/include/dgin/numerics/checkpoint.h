// Copyright 2026 The DGIN Authors
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

#ifndef DGIN_NUMERICS_CHECKPOINT_H_
#define DGIN_NUMERICS_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "dgin/numerics/parameter.h"

namespace dgin {

// A checkpoint is a directory holding
//   manifest.txt  "dgin-checkpoint 1", "schema_hash <16 hex>", "params <n>",
//                 then one "name rows cols byte_offset" line per parameter
//   params.bin    little-endian float64 values in manifest order
// Only parameter values are stored; optimizer state is not.
void SaveCheckpoint(const std::filesystem::path& dir, const ParameterSet& params, std::uint64_t schema_hash);

// Loads values into an already-built parameter set. Throws ConfigError when
// the schema hash, parameter names or shapes disagree, IoError on I/O
// failure.
void LoadCheckpoint(const std::filesystem::path& dir, ParameterSet& params, std::uint64_t schema_hash);

// Reads only the schema hash recorded in a checkpoint manifest.
std::uint64_t ReadCheckpointSchemaHash(const std::filesystem::path& dir);

// 64-bit FNV-1a.
std::uint64_t Fnv1a64(std::string_view bytes);
std::string HexU64(std::uint64_t v);

}  // namespace dgin

#endif  // DGIN_NUMERICS_CHECKPOINT_H_
