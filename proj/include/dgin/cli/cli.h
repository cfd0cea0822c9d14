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

#ifndef DGIN_CLI_CLI_H_
#define DGIN_CLI_CLI_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dgin/data/behavior.h"
#include "dgin/model/model.h"
#include "dgin/store/behavior_store.h"

namespace dgin {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

// Runs one command (gen, store-build, store-update, store-query, train, eval,
// ablate, cache-check) and returns its exit code. argv[0] is the program name.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// A generated data directory: events.jsonl and instances.jsonl, split so
// that instances on the last decision day are the test set.
struct Dataset {
  std::vector<UserEvent> events;
  std::vector<Instance> train;
  std::vector<Instance> test;
};
Dataset LoadDataset(const std::filesystem::path& dir);

// Store settings able to serve a model configuration.
StoreConfig StoreConfigFor(const ModelConfig& config);
BehaviorStore BuildStore(const std::vector<UserEvent>& events, const StoreConfig& config, bool clicks_only = false);

// Hash of "blob <size>\0<content>" in the manner of git object ids, using
// 64-bit FNV-1a. Throws IoError if the file cannot be read.
std::string ContentHash(const std::filesystem::path& file);

// Record of one CLI run, written as run_manifest.json.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // role -> path
  std::map<std::string, std::string> outputs;  // relative path -> content hash
  std::map<std::string, std::string> summary;  // free-form results
  double wall_seconds = 0.0;
};
// Hashes every regular file under dir (except the manifest) and writes
// dir/run_manifest.json.
void WriteRunManifest(const std::filesystem::path& dir, RunManifest manifest);

}  // namespace dgin

#endif  // DGIN_CLI_CLI_H_
