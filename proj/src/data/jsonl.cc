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

#include "dgin/data/jsonl.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "dgin/error.h"
#include "json.hpp"

namespace dgin {
namespace {

using nlohmann::json;

constexpr std::size_t kMaxSamples = 5;

std::int64_t RequireInt(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("missing key ") + key);
  if (!it->is_number_integer()) throw DataError(std::string("key ") + key + " is not an integer");
  return it->get<std::int64_t>();
}

CandidateItem CandidateFromJson(const json& c) {
  if (!c.is_object()) throw DataError("candidate must be an object");
  CandidateItem out;
  out.item_id = RequireInt(c, "item_id");
  out.category_id = RequireInt(c, "category_id");
  out.price_cents = RequireInt(c, "price_cents");
  out.location_cell = RequireInt(c, "location_cell");
  if (out.item_id < 0 || out.category_id < 0 || out.price_cents < 0 || out.location_cell < 0)
    throw DataError("candidate fields must be nonnegative");
  return out;
}

template <typename T>
std::vector<T> ReadLines(const std::filesystem::path& path, T (*parse)(const std::string&), ParseReport* report) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<T> out;
  ParseReport local;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
      continue;
    ++local.lines;
    try {
      out.push_back(parse(line));
    } catch (const DataError& e) {
      ++local.malformed;
      if (local.samples.size() < kMaxSamples)
        local.samples.push_back("line " + std::to_string(local.lines) + ": " + e.what());
    }
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  if (local.malformed * 100 > local.lines) {
    throw DataError(path.string() + ": " + std::to_string(local.malformed) + " of " + std::to_string(local.lines) +
                    " lines malformed (limit 1%)" + (local.samples.empty() ? "" : "; first: " + local.samples[0]));
  }
  if (report != nullptr) *report = local;
  return out;
}

}  // namespace

std::string SerializeEvent(const UserEvent& ue) {
  const BehaviorEvent& e = ue.event;
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "{\"user_id\":%lld,\"item_id\":%lld,\"category_id\":%lld,\"price_cents\":%lld,\"timestamp\":%lld,"
                "\"location_cell\":%lld,\"behavior_type\":\"%s\",\"dwell_seconds\":%lld}",
                static_cast<long long>(ue.user_id), static_cast<long long>(e.item_id),
                static_cast<long long>(e.category_id), static_cast<long long>(e.price_cents),
                static_cast<long long>(e.timestamp), static_cast<long long>(e.location_cell),
                std::string(BehaviorTypeName(e.behavior_type)).c_str(), static_cast<long long>(e.dwell_seconds));
  return buf;
}

UserEvent ParseEventLine(const std::string& line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw DataError("event line is not a JSON object");
  if (obj.size() != 8) throw DataError("event line must have exactly 8 keys, got " + std::to_string(obj.size()));
  UserEvent ue;
  ue.user_id = RequireInt(obj, "user_id");
  BehaviorEvent& e = ue.event;
  e.item_id = RequireInt(obj, "item_id");
  e.category_id = RequireInt(obj, "category_id");
  e.price_cents = RequireInt(obj, "price_cents");
  e.timestamp = RequireInt(obj, "timestamp");
  e.location_cell = RequireInt(obj, "location_cell");
  e.dwell_seconds = RequireInt(obj, "dwell_seconds");
  auto bt = obj.find("behavior_type");
  if (bt == obj.end() || !bt->is_string()) throw DataError("behavior_type missing or not a string");
  auto type = ParseBehaviorType(bt->get<std::string>());
  if (!type) throw DataError("unknown behavior_type " + bt->get<std::string>());
  e.behavior_type = *type;
  if (std::string why = CheckEvent(e); !why.empty()) throw DataError(why);
  return ue;
}

ParseReport ForEachEvent(const std::filesystem::path& path, const std::function<void(UserEvent&&)>& sink) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open event log " + path.string());
  ParseReport report;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++report.lines;
    UserEvent ue;
    try {
      ue = ParseEventLine(line);
    } catch (const DataError& e) {
      ++report.malformed;
      if (report.samples.size() < kMaxSamples)
        report.samples.push_back("line " + std::to_string(report.lines) + ": " + e.what());
      continue;
    }
    sink(std::move(ue));
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  if (report.malformed * 100 > report.lines) {
    throw DataError(path.string() + ": " + std::to_string(report.malformed) + " of " +
                    std::to_string(report.lines) + " lines malformed (limit 1%)" +
                    (report.samples.empty() ? "" : "; first: " + report.samples[0]));
  }
  return report;
}

std::vector<UserEvent> ReadEventLog(const std::filesystem::path& path, ParseReport* report) {
  std::vector<UserEvent> out;
  ParseReport r = ForEachEvent(path, [&out](UserEvent&& e) { out.push_back(std::move(e)); });
  if (report != nullptr) *report = r;
  return out;
}

void WriteEventLog(const std::filesystem::path& path, const std::vector<UserEvent>& events) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const UserEvent& e : events) out << SerializeEvent(e) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

std::string SerializeInstance(const Instance& inst) {
  json obj = {
      {"user_id", inst.user_id},
      {"user_features", {{"segment", inst.user.segment}, {"age_band", inst.user.age_band}}},
      {"candidate",
       {{"item_id", inst.candidate.item_id},
        {"category_id", inst.candidate.category_id},
        {"price_cents", inst.candidate.price_cents},
        {"location_cell", inst.candidate.location_cell}}},
      {"context", {{"hour_of_week", inst.context.hour_of_week}, {"surface", inst.context.surface}}},
      {"decision_timestamp", inst.decision_timestamp},
      {"label", inst.label},
  };
  return obj.dump();
}

Instance ParseInstanceLine(const std::string& line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw DataError("instance line is not a JSON object");
  Instance inst;
  inst.user_id = RequireInt(obj, "user_id");
  if (auto uf = obj.find("user_features"); uf != obj.end()) {
    if (!uf->is_object()) throw DataError("user_features must be an object");
    inst.user.segment = RequireInt(*uf, "segment");
    inst.user.age_band = RequireInt(*uf, "age_band");
  }
  auto cand = obj.find("candidate");
  if (cand == obj.end()) throw DataError("missing key candidate");
  inst.candidate = CandidateFromJson(*cand);
  auto ctx = obj.find("context");
  if (ctx == obj.end() || !ctx->is_object()) throw DataError("missing or invalid context");
  inst.context.hour_of_week = RequireInt(*ctx, "hour_of_week");
  inst.context.surface = RequireInt(*ctx, "surface");
  inst.decision_timestamp = RequireInt(obj, "decision_timestamp");
  // Labels outside {0,1} are kept here and reported by instance validation.
  inst.label = static_cast<int>(RequireInt(obj, "label"));
  return inst;
}

CandidateItem ParseCandidateJson(const std::string& text) {
  try {
    return CandidateFromJson(json::parse(text));
  } catch (const json::parse_error& e) {
    throw DataError(std::string("invalid candidate JSON: ") + e.what());
  }
}

std::vector<Instance> ReadInstances(const std::filesystem::path& path, ParseReport* report) {
  return ReadLines<Instance>(path, &ParseInstanceLine, report);
}

void WriteInstances(const std::filesystem::path& path, const std::vector<Instance>& instances) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const Instance& i : instances) out << SerializeInstance(i) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

std::vector<BehaviorSequence> GroupByUser(const std::vector<UserEvent>& events) {
  std::map<std::int64_t, BehaviorSequence> by_user;
  for (const UserEvent& e : events) {
    BehaviorSequence& s = by_user[e.user_id];
    s.user_id = e.user_id;
    s.events.push_back(e.event);
  }
  std::vector<BehaviorSequence> out;
  out.reserve(by_user.size());
  for (auto& [id, seq] : by_user) out.push_back(std::move(seq));
  return out;
}

}  // namespace dgin
