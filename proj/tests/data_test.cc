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

#include <fstream>

#include "dgin/data/behavior.h"
#include "dgin/data/jsonl.h"
#include "dgin/data/kv_config.h"
#include "dgin/error.h"
#include "test_util.h"

namespace dgin {
namespace {

using testing_util::TempDir;

UserEvent SampleEvent() {
  UserEvent e;
  e.user_id = 12;
  e.event.item_id = 401;
  e.event.category_id = 7;
  e.event.price_cents = 1999;
  e.event.timestamp = 1672617600 - 3600;
  e.event.location_cell = 33;
  e.event.behavior_type = BehaviorType::kPurchase;
  e.event.dwell_seconds = 40;
  return e;
}

TEST(BehaviorType, NamesRoundTrip) {
  for (int i = 0; i < kNumBehaviorTypes; ++i) {
    const auto t = static_cast<BehaviorType>(i);
    EXPECT_EQ(ParseBehaviorType(BehaviorTypeName(t)), t);
  }
  EXPECT_FALSE(ParseBehaviorType("hover").has_value());
  EXPECT_EQ(BehaviorTypeName(BehaviorType::kAddToCart), "add_to_cart");
}

TEST(Calendar, MondayMidnightIsHourZero) {
  const std::int64_t monday = 1672617600;  // 2023-01-02 00:00 UTC
  EXPECT_EQ(DayOfWeek(monday), 0);
  EXPECT_EQ(HourOfWeek(monday), 0);
  EXPECT_EQ(HourOfWeek(monday + 5 * kSecondsPerDay + 13 * 3600), 5 * 24 + 13);
  EXPECT_TRUE(IsWeekend(monday - 1));
  EXPECT_FALSE(IsWeekend(monday));
  EXPECT_EQ(DayOfWeek(0), 3);  // 1970-01-01 was a Thursday
}

TEST(CheckEvent, FieldInvariants) {
  UserEvent e = SampleEvent();
  EXPECT_EQ(CheckEvent(e.event), "");
  BehaviorEvent bad = e.event;
  bad.behavior_type = BehaviorType::kClick;  // price on a non-purchase
  EXPECT_NE(CheckEvent(bad), "");
  bad = e.event;
  bad.price_cents = -5;
  EXPECT_NE(CheckEvent(bad), "");
  bad = e.event;
  bad.dwell_seconds = -1;
  EXPECT_NE(CheckEvent(bad), "");
}

TEST(Jsonl, EventRoundTrip) {
  const UserEvent e = SampleEvent();
  EXPECT_EQ(ParseEventLine(SerializeEvent(e)), e);
}

TEST(Jsonl, RejectsUnknownAndMissingKeys) {
  std::string line = SerializeEvent(SampleEvent());
  EXPECT_THROW(ParseEventLine(line.substr(0, line.size() - 1) + ",\"extra\":1}"), DataError);
  EXPECT_THROW(ParseEventLine("{\"user_id\":1}"), DataError);
  EXPECT_THROW(ParseEventLine("not json"), DataError);
}

TEST(Jsonl, InstanceRoundTrip) {
  Instance inst;
  inst.user_id = 3;
  inst.user = {2, 5};
  inst.candidate = {10, 2, 450, 9};
  inst.context = {100, 1};
  inst.decision_timestamp = 1672617600 + 7200;
  inst.label = 1;
  EXPECT_EQ(ParseInstanceLine(SerializeInstance(inst)), inst);
}

TEST(Jsonl, MalformedRateThreshold) {
  TempDir dir;
  const auto path = dir.path() / "events.jsonl";
  std::vector<UserEvent> events(200, SampleEvent());
  WriteEventLog(path, events);
  {
    std::ofstream out(path, std::ios::app);
    out << "{broken\n";
  }
  ParseReport report;
  EXPECT_EQ(ReadEventLog(path, &report).size(), 200u);
  EXPECT_EQ(report.malformed, 1u);
  {
    std::ofstream out(path, std::ios::app);
    out << "{broken\n{broken\n{broken\n";
  }
  EXPECT_THROW(ReadEventLog(path), DataError);
  EXPECT_THROW(ReadEventLog(dir.path() / "missing.jsonl"), IoError);
}

TEST(Jsonl, GroupByUserKeepsFileOrder) {
  std::vector<UserEvent> events;
  for (int i = 0; i < 6; ++i) {
    UserEvent e = SampleEvent();
    e.user_id = i % 2 ? 5 : 2;
    e.event.item_id = i;
    events.push_back(e);
  }
  const auto seqs = GroupByUser(events);
  ASSERT_EQ(seqs.size(), 2u);
  EXPECT_EQ(seqs[0].user_id, 2);
  EXPECT_EQ(seqs[0].events[1].item_id, 2);
  EXPECT_EQ(seqs[1].events[2].item_id, 5);
}

TEST(KeyValues, ParseOverrideAndTypes) {
  KeyValues kv = KeyValues::Parse("# comment\na = 1\nb = 2.5\n\nc = 1,2,3\na = 4\n");
  EXPECT_EQ(kv.GetInt("a", 0), 4);
  EXPECT_EQ(kv.GetDouble("b", 0), 2.5);
  EXPECT_EQ(kv.GetIntList("c", {}), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(kv.GetString("missing", "x"), "x");
  EXPECT_THROW(kv.GetInt("b", 0), ConfigError);
  EXPECT_THROW(kv.RequireKnown({"a", "b"}), ConfigError);
  EXPECT_THROW(KeyValues::Parse("no equals sign"), ConfigError);
}

TEST(FormatDouble, ExactRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e17}) {
    EXPECT_EQ(std::stod(FormatDouble(v)), v);
  }
}

}  // namespace
}  // namespace dgin
