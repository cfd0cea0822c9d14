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

#include "dgin/store/behavior_store.h"

#include <algorithm>
#include <fstream>

#include "dgin/error.h"
#include "json.hpp"

namespace dgin {
namespace {

using nlohmann::json;

constexpr int kSnapshotFormatVersion = 1;
constexpr std::size_t kMaxDiagnostics = 100;

template <typename T>
void PushBounded(std::vector<T>& v, const T& x, int cap) {
  v.push_back(x);
  if (cap >= 0 && static_cast<int>(v.size()) > cap) v.erase(v.begin(), v.end() - cap);
}

json EventToJson(const BehaviorEvent& e) {
  return json::array({e.item_id, e.category_id, e.price_cents, e.timestamp, e.location_cell,
                      TypeIndex(e.behavior_type), e.dwell_seconds});
}

BehaviorType TypeFromIndex(std::int64_t t) {
  if (t < 0 || t >= kNumBehaviorTypes) throw DataError("behavior type index out of range in snapshot");
  return static_cast<BehaviorType>(t);
}

BehaviorEvent EventFromJson(const json& a) {
  if (!a.is_array() || a.size() != 7) throw DataError("snapshot event must be a 7-element array");
  BehaviorEvent e;
  e.item_id = a[0].get<std::int64_t>();
  e.category_id = a[1].get<std::int64_t>();
  e.price_cents = a[2].get<std::int64_t>();
  e.timestamp = a[3].get<std::int64_t>();
  e.location_cell = a[4].get<std::int64_t>();
  e.behavior_type = TypeFromIndex(a[5].get<std::int64_t>());
  e.dwell_seconds = a[6].get<std::int64_t>();
  return e;
}

json GroupToJson(const InterestGroup& g) {
  json members = json::array();
  for (const MemberRecord& m : g.members)
    members.push_back(json::array({m.timestamp, m.location_cell, TypeIndex(m.behavior_type), m.item_id}));
  json tail = json::array();
  for (const BehaviorEvent& e : g.tail) tail.push_back(EventToJson(e));
  const GroupStats& s = g.stats;
  return json{
      {"interest_key", g.interest_key},
      {"identity",
       {{"item_id", g.identity.item_id},
        {"category_id", g.identity.category_id},
        {"price_cents", g.identity.price_cents}}},
      {"last_active", g.last_active},
      {"stats",
       {{"total_behaviors", s.total_behaviors},
        {"distinct_types", s.distinct_types},
        {"per_type_counts", s.per_type_counts},
        {"avg_dwell_seconds", s.avg_dwell_seconds},
        {"avg_purchase_cents", s.avg_purchase_cents},
        {"distinct_item_count", s.distinct_item_count},
        {"total_item_count", s.total_item_count}}},
      {"members", std::move(members)},
      {"tail", std::move(tail)},
      {"distinct_items", g.distinct_items},
  };
}

InterestGroup GroupFromJson(const json& j) {
  InterestGroup g;
  g.interest_key = j.at("interest_key").get<std::int64_t>();
  const json& id = j.at("identity");
  g.identity.item_id = id.at("item_id").get<std::int64_t>();
  g.identity.category_id = id.at("category_id").get<std::int64_t>();
  g.identity.price_cents = id.at("price_cents").get<std::int64_t>();
  g.last_active = j.at("last_active").get<std::int64_t>();
  const json& s = j.at("stats");
  g.stats.total_behaviors = s.at("total_behaviors").get<std::int64_t>();
  g.stats.distinct_types = s.at("distinct_types").get<std::int64_t>();
  g.stats.per_type_counts = s.at("per_type_counts").get<std::array<std::int64_t, kNumBehaviorTypes>>();
  g.stats.avg_dwell_seconds = s.at("avg_dwell_seconds").get<double>();
  g.stats.avg_purchase_cents = s.at("avg_purchase_cents").get<double>();
  g.stats.distinct_item_count = s.at("distinct_item_count").get<std::int64_t>();
  g.stats.total_item_count = s.at("total_item_count").get<std::int64_t>();
  for (const json& m : j.at("members")) {
    if (!m.is_array() || m.size() != 4) throw DataError("snapshot member must be a 4-element array");
    g.members.push_back(MemberRecord{m[0].get<std::int64_t>(), m[1].get<std::int64_t>(),
                                     TypeFromIndex(m[2].get<std::int64_t>()), m[3].get<std::int64_t>()});
  }
  for (const json& e : j.at("tail")) g.tail.push_back(EventFromJson(e));
  g.distinct_items = j.at("distinct_items").get<std::vector<std::int64_t>>();
  if (g.members.empty()) throw DataError("snapshot group with no members");
  return g;
}

}  // namespace

std::string_view KeyFieldName(KeyField k) { return k == KeyField::kItemId ? "item_id" : "category_id"; }

KeyField ParseKeyField(std::string_view name) {
  if (name == "item_id") return KeyField::kItemId;
  if (name == "category_id") return KeyField::kCategoryId;
  throw ConfigError("unknown key field '" + std::string(name) + "' (expected item_id or category_id)");
}

std::int64_t KeyOf(const BehaviorEvent& e, KeyField k) {
  return k == KeyField::kItemId ? e.item_id : e.category_id;
}

std::int64_t KeyOf(const CandidateItem& c, KeyField k) {
  return k == KeyField::kItemId ? c.item_id : c.category_id;
}

void AccumulateStats(GroupStats& s, const BehaviorEvent& e) {
  const int t = TypeIndex(e.behavior_type);
  const auto n = static_cast<double>(s.total_behaviors);
  s.avg_dwell_seconds = (s.avg_dwell_seconds * n + static_cast<double>(e.dwell_seconds)) / (n + 1.0);
  if (e.behavior_type == BehaviorType::kPurchase) {
    const auto np = static_cast<double>(s.per_type_counts[t]);
    const double prev = np == 0.0 ? 0.0 : s.avg_purchase_cents;
    s.avg_purchase_cents = (prev * np + static_cast<double>(e.price_cents)) / (np + 1.0);
  }
  if (s.per_type_counts[t] == 0) ++s.distinct_types;
  ++s.per_type_counts[t];
  ++s.total_behaviors;
}

GroupStats ComputeStats(const std::vector<BehaviorEvent>& members) {
  if (members.empty()) throw PreconditionError("ComputeStats: empty member list");
  GroupStats s;
  for (const BehaviorEvent& e : members) AccumulateStats(s, e);
  return s;
}

bool ServesBefore(const InterestGroup& a, const InterestGroup& b) {
  if (a.last_active != b.last_active) return a.last_active > b.last_active;
  if (a.stats.total_behaviors != b.stats.total_behaviors) return a.stats.total_behaviors > b.stats.total_behaviors;
  return a.interest_key < b.interest_key;
}

std::string UserRecord::Ingest(const BehaviorEvent& e) {
  if (std::string why = CheckEvent(e); !why.empty()) return why;
  if (total_ingested_ > 0 && e.timestamp < max_timestamp_) {
    return "out-of-order event at " + std::to_string(e.timestamp) + " before stored " +
           std::to_string(max_timestamp_);
  }
  const std::int64_t key = KeyOf(e, config_.key_field);
  auto [it, inserted] = groups_.try_emplace(key);
  InterestGroup& g = it->second;
  if (inserted) g.interest_key = key;
  const bool category_mode = config_.key_field == KeyField::kCategoryId;
  g.identity.item_id = category_mode ? 0 : e.item_id;
  g.identity.category_id = e.category_id;
  g.identity.price_cents = e.price_cents;
  PushBounded(g.members, MemberRecord{e.timestamp, e.location_cell, e.behavior_type, e.item_id}, config_.max_members);
  PushBounded(g.tail, e, config_.tail_capacity);
  AccumulateStats(g.stats, e);
  if (category_mode) {
    auto pos = std::lower_bound(g.distinct_items.begin(), g.distinct_items.end(), e.item_id);
    if (pos == g.distinct_items.end() || *pos != e.item_id) g.distinct_items.insert(pos, e.item_id);
    g.stats.distinct_item_count = static_cast<std::int64_t>(g.distinct_items.size());
    g.stats.total_item_count = g.stats.total_behaviors;
  }
  g.last_active = e.timestamp;
  recent_.push_back(e);
  while (static_cast<int>(recent_.size()) > config_.recent_capacity) recent_.pop_front();
  max_timestamp_ = std::max(max_timestamp_, e.timestamp);
  ++total_ingested_;
  return {};
}

const InterestGroup* UserRecord::Find(std::int64_t key) const {
  auto it = groups_.find(key);
  return it == groups_.end() ? nullptr : &it->second;
}

std::vector<const InterestGroup*> UserRecord::Served() const {
  std::vector<const InterestGroup*> all;
  all.reserve(groups_.size());
  for (const auto& [key, g] : groups_) all.push_back(&g);
  auto cmp = [](const InterestGroup* a, const InterestGroup* b) { return ServesBefore(*a, *b); };
  const std::size_t keep = std::min(all.size(), static_cast<std::size_t>(std::max(config_.max_groups, 0)));
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), cmp);
  all.resize(keep);
  return all;
}

GroupedSequence UserRecord::View() const {
  GroupedSequence out;
  out.user_id = user_id_;
  std::int64_t served_behaviors = 0;
  for (const InterestGroup* g : Served()) {
    out.groups.push_back(*g);
    served_behaviors += g->stats.total_behaviors;
  }
  out.dropped_groups = static_cast<std::int64_t>(groups_.size() - out.groups.size());
  out.dropped_behaviors = total_ingested_ - served_behaviors;
  return out;
}

void UserRecord::Restore(std::int64_t max_timestamp, std::int64_t total_ingested, std::deque<BehaviorEvent> recent,
                         std::vector<InterestGroup> groups) {
  max_timestamp_ = max_timestamp;
  total_ingested_ = total_ingested;
  recent_ = std::move(recent);
  groups_.clear();
  for (InterestGroup& g : groups) {
    const std::int64_t key = g.interest_key;
    if (!groups_.emplace(key, std::move(g)).second) throw DataError("duplicate interest key in snapshot");
  }
}

GroupedSequence GroupSequence(const BehaviorSequence& seq, KeyField key_field, int B, int G, int tail_capacity) {
  StoreConfig cfg;
  cfg.key_field = key_field;
  cfg.max_members = B;
  cfg.max_groups = G;
  cfg.tail_capacity = tail_capacity;
  UserRecord rec(seq.user_id, cfg);
  for (const BehaviorEvent& e : seq.events) {
    if (std::string why = rec.Ingest(e); !why.empty()) {
      throw PreconditionError("GroupSequence: user " + std::to_string(seq.user_id) + ": " + why);
    }
  }
  return rec.View();
}

BehaviorStore::BehaviorStore(StoreConfig config) : config_(config) {
  if (config_.max_members < 1 || config_.max_groups < 1 || config_.tail_capacity < 1 || config_.recent_capacity < 0) {
    throw ConfigError("store config needs B >= 1, G >= 1, tail >= 1, recent >= 0");
  }
}

UpdateReport BehaviorStore::Update(const std::vector<UserEvent>& batch) {
  UpdateReport report;
  for (const UserEvent& ue : batch) {
    auto it = users_.find(ue.user_id);
    if (it == users_.end()) it = users_.emplace(ue.user_id, UserRecord(ue.user_id, config_)).first;
    std::string why = it->second.Ingest(ue.event);
    if (why.empty()) {
      ++report.accepted;
      reference_timestamp_ = std::max(reference_timestamp_, ue.event.timestamp);
    } else {
      ++report.rejected;
      if (report.diagnostics.size() < kMaxDiagnostics)
        report.diagnostics.push_back("user " + std::to_string(ue.user_id) + ": " + why);
      if (it->second.total_ingested() == 0) users_.erase(it);
    }
  }
  return report;
}

UpdateReport BehaviorStore::Update(const UserEvent& e) { return Update(std::vector<UserEvent>{e}); }

const UserRecord* BehaviorStore::User(std::int64_t user_id) const {
  auto it = users_.find(user_id);
  return it == users_.end() ? nullptr : &it->second;
}

const InterestGroup* BehaviorStore::Lookup(std::int64_t user_id, std::int64_t key) const {
  const UserRecord* u = User(user_id);
  return u == nullptr ? nullptr : u->Find(key);
}

GroupedSequence BehaviorStore::Grouped(std::int64_t user_id) const {
  const UserRecord* u = User(user_id);
  if (u == nullptr) {
    GroupedSequence empty;
    empty.user_id = user_id;
    return empty;
  }
  return u->View();
}

SubsequenceResult BehaviorStore::CandidateSubsequence(std::int64_t user_id, const CandidateItem& candidate,
                                                      int T) const {
  SubsequenceResult out;
  const UserRecord* u = User(user_id);
  if (u == nullptr) {
    out.cold_start = true;
    return out;
  }
  const InterestGroup* g = u->Find(KeyOf(candidate, config_.key_field));
  if (g == nullptr || T <= 0) return out;
  const std::size_t n = std::min(g->tail.size(), static_cast<std::size_t>(T));
  out.events.assign(g->tail.end() - static_cast<std::ptrdiff_t>(n), g->tail.end());
  return out;
}

std::vector<std::int64_t> BehaviorStore::UserIds() const {
  std::vector<std::int64_t> ids;
  ids.reserve(users_.size());
  for (const auto& [id, rec] : users_) ids.push_back(id);
  return ids;
}

void BehaviorStore::Save(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create snapshot directory " + dir.string() + ": " + ec.message());
  {
    json manifest = {
        {"format_version", kSnapshotFormatVersion},
        {"key_field", std::string(KeyFieldName(config_.key_field))},
        {"B", config_.max_members},
        {"G", config_.max_groups},
        {"tail_capacity", config_.tail_capacity},
        {"recent_capacity", config_.recent_capacity},
        {"user_count", users_.size()},
        {"reference_timestamp", reference_timestamp_},
    };
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("write failure on manifest.json");
  }
  std::ofstream out(dir / "users.jsonl", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "users.jsonl").string());
  for (const auto& [id, rec] : users_) {
    std::vector<const InterestGroup*> groups;
    for (const auto& [key, g] : rec.all_groups()) groups.push_back(&g);
    std::sort(groups.begin(), groups.end(),
              [](const InterestGroup* a, const InterestGroup* b) { return a->interest_key < b->interest_key; });
    json jg = json::array();
    for (const InterestGroup* g : groups) jg.push_back(GroupToJson(*g));
    json recent = json::array();
    for (const BehaviorEvent& e : rec.recent()) recent.push_back(EventToJson(e));
    json line = {{"user_id", id},
                 {"max_timestamp", rec.max_timestamp()},
                 {"total_ingested", rec.total_ingested()},
                 {"recent", std::move(recent)},
                 {"groups", std::move(jg)}};
    out << line.dump() << '\n';
  }
  if (!out) throw IoError("write failure on users.jsonl");
}

BehaviorStore BehaviorStore::Load(const std::filesystem::path& dir) {
  std::ifstream min(dir / "manifest.json");
  if (!min) throw IoError("cannot open snapshot manifest " + (dir / "manifest.json").string());
  json manifest;
  try {
    manifest = json::parse(min);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid snapshot manifest: ") + e.what());
  }
  StoreConfig cfg;
  std::size_t user_count = 0;
  std::int64_t reference = 0;
  try {
    if (manifest.at("format_version").get<int>() != kSnapshotFormatVersion)
      throw DataError("unsupported snapshot format version");
    cfg.key_field = ParseKeyField(manifest.at("key_field").get<std::string>());
    cfg.max_members = manifest.at("B").get<int>();
    cfg.max_groups = manifest.at("G").get<int>();
    cfg.tail_capacity = manifest.at("tail_capacity").get<int>();
    cfg.recent_capacity = manifest.at("recent_capacity").get<int>();
    user_count = manifest.at("user_count").get<std::size_t>();
    reference = manifest.at("reference_timestamp").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid snapshot manifest: ") + e.what());
  }
  BehaviorStore store(cfg);
  store.reference_timestamp_ = reference;
  std::ifstream in(dir / "users.jsonl");
  if (!in) throw IoError("cannot open " + (dir / "users.jsonl").string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      const std::int64_t id = j.at("user_id").get<std::int64_t>();
      std::deque<BehaviorEvent> recent;
      for (const json& e : j.at("recent")) recent.push_back(EventFromJson(e));
      std::vector<InterestGroup> groups;
      for (const json& g : j.at("groups")) groups.push_back(GroupFromJson(g));
      UserRecord rec(id, store.config_);
      rec.Restore(j.at("max_timestamp").get<std::int64_t>(), j.at("total_ingested").get<std::int64_t>(),
                  std::move(recent), std::move(groups));
      if (!store.users_.emplace(id, std::move(rec)).second) throw DataError("duplicate user");
    } catch (const json::exception& e) {
      throw DataError("snapshot users.jsonl line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("snapshot users.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (store.users_.size() != user_count) {
    throw DataError("snapshot manifest lists " + std::to_string(user_count) + " users, found " +
                    std::to_string(store.users_.size()));
  }
  return store;
}

bool BehaviorStore::operator==(const BehaviorStore& other) const {
  if (!(config_ == other.config_) || reference_timestamp_ != other.reference_timestamp_ ||
      users_.size() != other.users_.size())
    return false;
  auto a = users_.begin();
  auto b = other.users_.begin();
  for (; a != users_.end(); ++a, ++b) {
    const UserRecord& x = a->second;
    const UserRecord& y = b->second;
    if (a->first != b->first || x.max_timestamp() != y.max_timestamp() ||
        x.total_ingested() != y.total_ingested() || x.recent() != y.recent() || x.all_groups() != y.all_groups())
      return false;
  }
  return true;
}

std::vector<std::string> ValidateInstance(const Instance& inst, const BehaviorStore& store) {
  std::vector<std::string> violations;
  if (inst.label != 0 && inst.label != 1) violations.push_back("label " + std::to_string(inst.label) + " not in {0,1}");
  const UserRecord* u = store.User(inst.user_id);
  if (u == nullptr) {
    violations.push_back("unknown user " + std::to_string(inst.user_id));
  } else if (u->max_timestamp() >= inst.decision_timestamp) {
    violations.push_back("leakage: stored event at " + std::to_string(u->max_timestamp()) +
                         " is not before decision time " + std::to_string(inst.decision_timestamp));
  }
  return violations;
}

}  // namespace dgin
