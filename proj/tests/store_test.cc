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

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "dgin/data/behavior.h"
#include "dgin/error.h"
#include "dgin/numerics/parameter.h"
#include "dgin/store/behavior_store.h"
#include "test_util.h"

namespace dgin {
namespace {

using testing_util::TempDir;

constexpr std::int64_t kStart = 1640995200;  // 2022-01-01

// Random per-user chronological events over a small item and category space.
std::vector<UserEvent> RandomEvents(int users, int per_user, std::uint64_t seed, std::int64_t start = kStart) {
  std::mt19937_64 rng(seed);
  std::vector<UserEvent> out;
  for (int u = 1; u <= users; ++u) {
    std::int64_t t = start;
    for (int i = 0; i < per_user; ++i) {
      UserEvent e;
      e.user_id = u;
      t += static_cast<std::int64_t>(UnitUniform(rng) * 7200);
      e.event.timestamp = t;
      e.event.item_id = 1 + static_cast<std::int64_t>(UnitUniform(rng) * 40);
      e.event.category_id = e.event.item_id % 6;
      e.event.location_cell = static_cast<std::int64_t>(UnitUniform(rng) * 10);
      e.event.behavior_type = static_cast<BehaviorType>(static_cast<int>(UnitUniform(rng) * kNumBehaviorTypes));
      e.event.dwell_seconds = static_cast<std::int64_t>(UnitUniform(rng) * 300);
      if (e.event.behavior_type == BehaviorType::kPurchase) {
        e.event.price_cents = 100 + static_cast<std::int64_t>(UnitUniform(rng) * 5000);
      }
      out.push_back(e);
    }
  }
  // Interleave users while keeping each user's order.
  std::stable_sort(out.begin(), out.end(),
                   [](const UserEvent& a, const UserEvent& b) { return a.event.timestamp < b.event.timestamp; });
  return out;
}

// Everything below is recomputed from the raw events without the store.
struct OracleGroup {
  std::vector<BehaviorEvent> events;
};

std::map<std::int64_t, OracleGroup> OracleGroups(const std::vector<UserEvent>& events, std::int64_t user,
                                                 KeyField key) {
  std::map<std::int64_t, OracleGroup> groups;
  for (const UserEvent& e : events) {
    if (e.user_id != user) continue;
    groups[key == KeyField::kItemId ? e.event.item_id : e.event.category_id].events.push_back(e.event);
  }
  return groups;
}

class StoreOracle : public ::testing::TestWithParam<KeyField> {};

TEST_P(StoreOracle, GroupsMatchRecount) {
  const KeyField key = GetParam();
  const auto events = RandomEvents(6, 300, 17);
  StoreConfig cfg;
  cfg.key_field = key;
  cfg.max_members = 5;
  cfg.max_groups = 100;
  cfg.tail_capacity = 9;
  BehaviorStore store(cfg);
  EXPECT_EQ(store.Update(events).rejected, 0u);
  for (std::int64_t user = 1; user <= 6; ++user) {
    const auto oracle = OracleGroups(events, user, key);
    const UserRecord* rec = store.User(user);
    ASSERT_NE(rec, nullptr);
    EXPECT_EQ(rec->all_groups().size(), oracle.size());
    for (const auto& [k, og] : oracle) {
      const InterestGroup* g = store.Lookup(user, k);
      ASSERT_NE(g, nullptr);
      const auto& ev = og.events;
      EXPECT_EQ(g->stats.total_behaviors, static_cast<std::int64_t>(ev.size()));
      std::array<std::int64_t, kNumBehaviorTypes> counts{};
      double dwell = 0, spend = 0;
      int purchases = 0;
      std::set<std::int64_t> items;
      for (const BehaviorEvent& e : ev) {
        ++counts[TypeIndex(e.behavior_type)];
        dwell += e.dwell_seconds;
        if (e.behavior_type == BehaviorType::kPurchase) spend += e.price_cents, ++purchases;
        items.insert(e.item_id);
      }
      EXPECT_EQ(g->stats.per_type_counts, counts);
      EXPECT_EQ(g->stats.distinct_types, std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
      EXPECT_NEAR(g->stats.avg_dwell_seconds, dwell / ev.size(), 1e-9);
      if (purchases == 0) {
        EXPECT_EQ(g->stats.avg_purchase_cents, -1.0);
      } else {
        EXPECT_NEAR(g->stats.avg_purchase_cents, spend / purchases, 1e-9);
      }
      if (key == KeyField::kCategoryId) {
        EXPECT_EQ(g->stats.distinct_item_count, static_cast<std::int64_t>(items.size()));
        EXPECT_EQ(g->stats.total_item_count, static_cast<std::int64_t>(ev.size()));
        EXPECT_EQ(g->identity.item_id, 0);
      } else {
        EXPECT_EQ(g->identity.item_id, k);
      }
      EXPECT_EQ(g->identity.price_cents, ev.back().price_cents);
      EXPECT_EQ(g->last_active, ev.back().timestamp);
      // Members are the most recent B, chronological.
      const std::size_t nm = std::min<std::size_t>(ev.size(), 5);
      ASSERT_EQ(g->members.size(), nm);
      for (std::size_t i = 0; i < nm; ++i) {
        const BehaviorEvent& want = ev[ev.size() - nm + i];
        EXPECT_EQ(g->members[i].timestamp, want.timestamp);
        EXPECT_EQ(g->members[i].item_id, want.item_id);
        EXPECT_EQ(g->members[i].behavior_type, want.behavior_type);
      }
      ASSERT_EQ(g->tail.size(), std::min<std::size_t>(ev.size(), 9));
      EXPECT_EQ(g->tail.back(), ev.back());
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Keys, StoreOracle, ::testing::Values(KeyField::kItemId, KeyField::kCategoryId));

TEST(Store, ServedGroupsAreCappedAndOrdered) {
  const auto events = RandomEvents(3, 400, 5);
  StoreConfig cfg;
  cfg.max_groups = 7;
  BehaviorStore store(cfg);
  store.Update(events);
  for (std::int64_t user = 1; user <= 3; ++user) {
    GroupedSequence g = store.Grouped(user);
    ASSERT_EQ(g.group_count(), 7u);
    for (std::size_t i = 1; i < g.groups.size(); ++i) EXPECT_TRUE(ServesBefore(g.groups[i - 1], g.groups[i]));
    const auto oracle = OracleGroups(events, user, KeyField::kItemId);
    EXPECT_EQ(g.dropped_groups, static_cast<std::int64_t>(oracle.size()) - 7);
    std::int64_t served = 0;
    for (const auto& grp : g.groups) served += grp.stats.total_behaviors;
    EXPECT_EQ(g.dropped_behaviors, 400 - served);
    // No unserved group is more recent than the last served one.
    for (const auto& [k, grp] : store.User(user)->all_groups()) {
      const bool is_served = std::any_of(g.groups.begin(), g.groups.end(),
                                         [&](const InterestGroup& s) { return s.interest_key == k; });
      if (!is_served) {
        EXPECT_FALSE(ServesBefore(grp, g.groups.back()));
      }
    }
  }
}

TEST(Store, StreamingEqualsRebuild) {
  const auto events = RandomEvents(20, 200, 9);
  StoreConfig cfg;
  cfg.max_groups = 12;
  cfg.max_members = 4;
  BehaviorStore full(cfg);
  full.Update(events);
  BehaviorStore streamed(cfg);
  // Four batches split by time.
  const std::int64_t t0 = events.front().event.timestamp, t1 = events.back().event.timestamp + 1;
  for (int b = 0; b < 4; ++b) {
    const std::int64_t lo = t0 + (t1 - t0) * b / 4, hi = t0 + (t1 - t0) * (b + 1) / 4;
    std::vector<UserEvent> batch;
    for (const UserEvent& e : events)
      if (e.event.timestamp >= lo && e.event.timestamp < hi) batch.push_back(e);
    streamed.Update(batch);
  }
  EXPECT_TRUE(streamed == full);
}

TEST(Store, OutOfOrderEventRejectedWithoutChange) {
  auto events = RandomEvents(1, 50, 3);
  BehaviorStore store;
  store.Update(events);
  UserEvent late = events[10];
  late.event.item_id = 999;
  const UpdateReport r = store.Update(late);
  EXPECT_EQ(r.rejected, 1u);
  EXPECT_EQ(store.Lookup(1, 999), nullptr);
  EXPECT_EQ(store.User(1)->total_ingested(), 50);
}

TEST(Store, SnapshotRoundTrip) {
  TempDir dir;
  StoreConfig cfg;
  cfg.key_field = KeyField::kCategoryId;
  BehaviorStore store(cfg);
  store.Update(RandomEvents(8, 120, 4));
  store.Save(dir.path());
  BehaviorStore loaded = BehaviorStore::Load(dir.path());
  EXPECT_TRUE(loaded == store);
  EXPECT_EQ(loaded.reference_timestamp(), store.reference_timestamp());
  // A loaded snapshot keeps streaming like the original.
  const auto more = RandomEvents(8, 30, 6, store.reference_timestamp() + 1000);
  store.Update(more);
  loaded.Update(more);
  EXPECT_TRUE(loaded == store);
  EXPECT_THROW(BehaviorStore::Load(dir.path() / "missing"), IoError);
}

TEST(Store, CandidateSubsequenceIsRecentChronological) {
  const auto events = RandomEvents(2, 500, 8);
  BehaviorStore store;
  store.Update(events);
  CandidateItem cand;
  cand.item_id = 7;
  const SubsequenceResult r = store.CandidateSubsequence(1, cand, 6);
  EXPECT_FALSE(r.cold_start);
  std::vector<BehaviorEvent> want;
  for (const UserEvent& e : events)
    if (e.user_id == 1 && e.event.item_id == 7) want.push_back(e.event);
  ASSERT_GE(want.size(), 6u);
  EXPECT_EQ(r.events, std::vector<BehaviorEvent>(want.end() - 6, want.end()));
  EXPECT_TRUE(store.CandidateSubsequence(42, cand, 6).cold_start);
  cand.item_id = 100000;
  EXPECT_TRUE(store.CandidateSubsequence(1, cand, 6).events.empty());
}

TEST(Store, RecentWindowKeepsLastEvents) {
  const auto events = RandomEvents(1, 80, 2);
  StoreConfig cfg;
  cfg.recent_capacity = 10;
  BehaviorStore store(cfg);
  store.Update(events);
  const auto& recent = store.User(1)->recent();
  ASSERT_EQ(recent.size(), 10u);
  EXPECT_EQ(recent.back(), events.back().event);
  EXPECT_EQ(recent.front(), events[70].event);
}

TEST(Store, GroupSequenceMatchesStore) {
  const auto events = RandomEvents(1, 150, 12);
  BehaviorSequence seq{1, {}};
  for (const UserEvent& e : events) seq.events.push_back(e.event);
  GroupedSequence one_shot = GroupSequence(seq, KeyField::kItemId, 8, 10);
  StoreConfig cfg;
  cfg.max_groups = 10;
  BehaviorStore store(cfg);
  store.Update(events);
  GroupedSequence streamed = store.Grouped(1);
  ASSERT_EQ(one_shot.group_count(), streamed.group_count());
  for (std::size_t i = 0; i < one_shot.groups.size(); ++i) EXPECT_EQ(one_shot.groups[i], streamed.groups[i]);
}

TEST(Store, ComputeStatsRejectsEmpty) { EXPECT_THROW(ComputeStats({}), PreconditionError); }

TEST(ValidateInstance, FlagsLeakageUnknownUserAndLabel) {
  const auto events = RandomEvents(1, 20, 1);
  BehaviorStore store;
  store.Update(events);
  Instance inst;
  inst.user_id = 1;
  inst.decision_timestamp = events.back().event.timestamp + 1;
  EXPECT_TRUE(ValidateInstance(inst, store).empty());
  inst.decision_timestamp = events.back().event.timestamp;
  EXPECT_FALSE(ValidateInstance(inst, store).empty());
  inst.decision_timestamp += 10;
  inst.label = 2;
  EXPECT_FALSE(ValidateInstance(inst, store).empty());
  inst.label = 0;
  inst.user_id = 77;
  EXPECT_FALSE(ValidateInstance(inst, store).empty());
}

TEST(KeyField, Parse) {
  EXPECT_EQ(ParseKeyField("category_id"), KeyField::kCategoryId);
  EXPECT_THROW(ParseKeyField("shop_id"), ConfigError);
}

}  // namespace
}  // namespace dgin
