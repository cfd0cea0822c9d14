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

#ifndef DGIN_STORE_BEHAVIOR_STORE_H_
#define DGIN_STORE_BEHAVIOR_STORE_H_

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dgin/data/behavior.h"

namespace dgin {

enum class KeyField { kItemId, kCategoryId };

std::string_view KeyFieldName(KeyField k);
// Accepts "item_id" and "category_id"; throws ConfigError otherwise.
KeyField ParseKeyField(std::string_view name);
std::int64_t KeyOf(const BehaviorEvent& e, KeyField k);
std::int64_t KeyOf(const CandidateItem& c, KeyField k);

// Spatio-temporal slice of one behavior kept for intra-group attention.
struct MemberRecord {
  std::int64_t timestamp = 0;
  std::int64_t location_cell = 0;
  BehaviorType behavior_type = BehaviorType::kClick;
  std::int64_t item_id = 0;
  bool operator==(const MemberRecord&) const = default;
};

struct GroupStats {
  std::int64_t total_behaviors = 0;
  std::int64_t distinct_types = 0;
  std::array<std::int64_t, kNumBehaviorTypes> per_type_counts{};
  double avg_dwell_seconds = 0.0;
  double avg_purchase_cents = -1.0;  // -1 when the group has no purchase
  // Category-key mode only; zero otherwise.
  std::int64_t distinct_item_count = 0;
  std::int64_t total_item_count = 0;

  bool operator==(const GroupStats&) const = default;
};

struct GroupIdentity {
  std::int64_t item_id = 0;  // 0 in category-key mode
  std::int64_t category_id = 0;
  std::int64_t price_cents = 0;  // of the most recent member
  bool operator==(const GroupIdentity&) const = default;
};

struct InterestGroup {
  std::int64_t interest_key = 0;
  GroupIdentity identity;
  std::vector<MemberRecord> members;  // most recent B, chronological
  GroupStats stats;                   // over every member ever ingested
  std::int64_t last_active = 0;
  // Most recent full events (at most the store's tail capacity), used for
  // candidate-keyed retrieval.
  std::vector<BehaviorEvent> tail;
  // Sorted distinct item ids; maintained only in category-key mode.
  std::vector<std::int64_t> distinct_items;

  bool operator==(const InterestGroup&) const = default;
};

// Folds one behavior into running statistics. Means use the count-weighted
// incremental form (avg * n + x) / (n + 1).
void AccumulateStats(GroupStats& stats, const BehaviorEvent& e);
// Statistics over a full member list; throws PreconditionError when empty.
GroupStats ComputeStats(const std::vector<BehaviorEvent>& members);

// True when a should be served before b: newer last_active, then more
// behaviors, then smaller key.
bool ServesBefore(const InterestGroup& a, const InterestGroup& b);

struct GroupedSequence {
  std::int64_t user_id = 0;
  std::vector<InterestGroup> groups;  // serving order, size <= G
  std::int64_t dropped_groups = 0;     // groups beyond G
  std::int64_t dropped_behaviors = 0;  // behaviors inside those groups
  std::size_t group_count() const { return groups.size(); }
};

struct StoreConfig {
  KeyField key_field = KeyField::kItemId;
  int max_members = 8;    // B
  int max_groups = 64;    // G
  int tail_capacity = 50;    // full events kept per group for retrieval
  int recent_capacity = 50;  // raw recent events per user (baseline input)
  bool operator==(const StoreConfig&) const = default;
};

// Everything stored for one user. Groups beyond G are kept in the record
// (so later batches can revive them exactly) but are not served.
class UserRecord {
 public:
  UserRecord() = default;
  UserRecord(std::int64_t user_id, const StoreConfig& config) : user_id_(user_id), config_(config) {}

  // Appends one behavior. Returns an empty string on success or a rejection
  // reason (out-of-order or invalid event); a rejected event changes nothing.
  std::string Ingest(const BehaviorEvent& e);

  std::int64_t user_id() const { return user_id_; }
  std::int64_t max_timestamp() const { return max_timestamp_; }
  std::int64_t total_ingested() const { return total_ingested_; }
  const std::deque<BehaviorEvent>& recent() const { return recent_; }
  const std::unordered_map<std::int64_t, InterestGroup>& all_groups() const { return groups_; }

  const InterestGroup* Find(std::int64_t key) const;
  // The served groups (at most G) in serving order.
  std::vector<const InterestGroup*> Served() const;
  GroupedSequence View() const;

  // Snapshot support.
  void Restore(std::int64_t max_timestamp, std::int64_t total_ingested, std::deque<BehaviorEvent> recent,
               std::vector<InterestGroup> groups);

 private:
  std::int64_t user_id_ = 0;
  StoreConfig config_;
  std::int64_t max_timestamp_ = 0;
  std::int64_t total_ingested_ = 0;
  std::deque<BehaviorEvent> recent_;
  std::unordered_map<std::int64_t, InterestGroup> groups_;
};

// One-shot grouping of a chronological sequence.
GroupedSequence GroupSequence(const BehaviorSequence& seq, KeyField key_field, int B, int G,
                              int tail_capacity = 50);

struct UpdateReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::string> diagnostics;  // one per rejected event (capped)
};

struct SubsequenceResult {
  std::vector<BehaviorEvent> events;  // chronological, at most T
  bool cold_start = false;            // user unknown to the store
};

// Two-level index user_id -> interest_key -> InterestGroup, built and
// maintained by streaming updates.
class BehaviorStore {
 public:
  explicit BehaviorStore(StoreConfig config = {});
  BehaviorStore(const BehaviorStore&) = delete;
  BehaviorStore& operator=(const BehaviorStore&) = delete;
  BehaviorStore(BehaviorStore&&) = default;
  BehaviorStore& operator=(BehaviorStore&&) = default;

  const StoreConfig& config() const { return config_; }

  // Ingests a batch in order. Events of one user must not precede that
  // user's newest stored timestamp; offenders are rejected individually.
  UpdateReport Update(const std::vector<UserEvent>& batch);
  UpdateReport Update(const UserEvent& e);

  bool HasUser(std::int64_t user_id) const { return users_.count(user_id) > 0; }
  const UserRecord* User(std::int64_t user_id) const;
  const InterestGroup* Lookup(std::int64_t user_id, std::int64_t key) const;
  // Served groups; empty for unknown users.
  GroupedSequence Grouped(std::int64_t user_id) const;
  SubsequenceResult CandidateSubsequence(std::int64_t user_id, const CandidateItem& candidate, int T) const;

  std::size_t user_count() const { return users_.size(); }
  std::vector<std::int64_t> UserIds() const;
  // Newest timestamp across all users; ages for embeddings are measured
  // against it so that group representations do not depend on the query.
  std::int64_t reference_timestamp() const { return reference_timestamp_; }

  // Snapshot directory: manifest.json + users.jsonl.
  void Save(const std::filesystem::path& dir) const;
  static BehaviorStore Load(const std::filesystem::path& dir);

  bool operator==(const BehaviorStore& other) const;

 private:
  StoreConfig config_;
  std::map<std::int64_t, UserRecord> users_;
  std::int64_t reference_timestamp_ = 0;
};

// Every violation of an instance against the store: unknown user, label not
// in {0,1}, and leakage (a stored event at or after the decision time).
std::vector<std::string> ValidateInstance(const Instance& inst, const BehaviorStore& store);

}  // namespace dgin

#endif  // DGIN_STORE_BEHAVIOR_STORE_H_
