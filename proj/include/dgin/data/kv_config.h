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

#ifndef DGIN_DATA_KV_CONFIG_H_
#define DGIN_DATA_KV_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dgin {

// Flat "key = value" configuration. '#' starts a comment; blank lines are
// ignored. Later assignments override earlier ones.
class KeyValues {
 public:
  static KeyValues Parse(const std::string& text, const std::string& origin = "<text>");
  // Throws IoError if the file cannot be read.
  static KeyValues ReadFile(const std::filesystem::path& path);

  void Set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool Has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  // Typed getters; a present but unparsable value throws ConfigError.
  std::string GetString(const std::string& key, const std::string& fallback) const;
  std::int64_t GetInt(const std::string& key, std::int64_t fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  std::vector<int> GetIntList(const std::string& key, const std::vector<int>& fallback) const;

  // Throws ConfigError naming the first key not in `known`.
  void RequireKnown(const std::vector<std::string>& known) const;

  std::string ToText() const;

 private:
  std::map<std::string, std::string> values_;
};

// Shortest decimal text that parses back to exactly v.
std::string FormatDouble(double v);

}  // namespace dgin

#endif  // DGIN_DATA_KV_CONFIG_H_
