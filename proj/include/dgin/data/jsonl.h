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

#ifndef DGIN_DATA_JSONL_H_
#define DGIN_DATA_JSONL_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "dgin/data/behavior.h"

namespace dgin {

// Event log: one JSON object per line with exactly the keys user_id, item_id,
// category_id, price_cents, timestamp, location_cell, behavior_type,
// dwell_seconds.
std::string SerializeEvent(const UserEvent& e);
// Throws DataError on malformed input (bad JSON, wrong keys, violated field
// invariants).
UserEvent ParseEventLine(const std::string& line);

struct ParseReport {
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::vector<std::string> samples;  // first few diagnostics
};

// Streams well-formed events in file order to `sink`. Blank lines are
// ignored. Throws IoError if the file cannot be read and DataError if more
// than 1% of lines are malformed (checked once the file is exhausted).
ParseReport ForEachEvent(const std::filesystem::path& path, const std::function<void(UserEvent&&)>& sink);
std::vector<UserEvent> ReadEventLog(const std::filesystem::path& path, ParseReport* report = nullptr);
void WriteEventLog(const std::filesystem::path& path, const std::vector<UserEvent>& events);

// Instance file: JSON-lines with user_id, user_features, candidate,
// context, decision_timestamp, label.
std::string SerializeInstance(const Instance& inst);
Instance ParseInstanceLine(const std::string& line);
CandidateItem ParseCandidateJson(const std::string& json);
std::vector<Instance> ReadInstances(const std::filesystem::path& path, ParseReport* report = nullptr);
void WriteInstances(const std::filesystem::path& path, const std::vector<Instance>& instances);

// Splits a merged event stream into per-user sequences, keeping each user's
// file order. Users are returned in ascending user_id.
std::vector<BehaviorSequence> GroupByUser(const std::vector<UserEvent>& events);

}  // namespace dgin

#endif  // DGIN_DATA_JSONL_H_
