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

#ifndef DGIN_DATA_BEHAVIOR_H_
#define DGIN_DATA_BEHAVIOR_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dgin {

enum class BehaviorType : std::uint8_t {
  kClick = 0,
  kAddToCart = 1,
  kAddToFavorite = 2,
  kBrowseDishes = 3,
  kViewComments = 4,
  kPurchase = 5,
};

inline constexpr int kNumBehaviorTypes = 6;

// Lowercase wire name ("click", "add_to_cart", ...).
std::string_view BehaviorTypeName(BehaviorType t);
std::optional<BehaviorType> ParseBehaviorType(std::string_view name);
inline int TypeIndex(BehaviorType t) { return static_cast<int>(t); }

// One timestamped user-item interaction.
struct BehaviorEvent {
  std::int64_t item_id = 0;
  std::int64_t category_id = 0;
  std::int64_t price_cents = 0;  // > 0 only for purchases
  std::int64_t timestamp = 0;    // unix seconds
  std::int64_t location_cell = 0;
  BehaviorType behavior_type = BehaviorType::kClick;
  std::int64_t dwell_seconds = 0;

  bool operator==(const BehaviorEvent&) const = default;
};

// Empty when the event satisfies every field invariant, else a description.
std::string CheckEvent(const BehaviorEvent& e);

struct UserEvent {
  std::int64_t user_id = 0;
  BehaviorEvent event;
  bool operator==(const UserEvent&) const = default;
};

// A user's chronologically ordered lifelong history.
struct BehaviorSequence {
  std::int64_t user_id = 0;
  std::vector<BehaviorEvent> events;
  std::size_t length() const { return events.size(); }
};

struct CandidateItem {
  std::int64_t item_id = 0;
  std::int64_t category_id = 0;
  std::int64_t price_cents = 0;
  std::int64_t location_cell = 0;
  bool operator==(const CandidateItem&) const = default;
};

struct UserFeatures {
  std::int64_t segment = 0;
  std::int64_t age_band = 0;
  bool operator==(const UserFeatures&) const = default;
};

struct ContextFeatures {
  std::int64_t hour_of_week = 0;  // 0..167, Monday 00h = 0
  std::int64_t surface = 0;
  bool operator==(const ContextFeatures&) const = default;
};

// One labeled impression.
struct Instance {
  std::int64_t user_id = 0;
  UserFeatures user;
  CandidateItem candidate;
  ContextFeatures context;
  std::int64_t decision_timestamp = 0;
  int label = 0;
  bool operator==(const Instance&) const = default;
};

// Calendar helpers (UTC).
constexpr std::int64_t kSecondsPerDay = 86400;
// 0 = Monday .. 6 = Sunday.
int DayOfWeek(std::int64_t unix_seconds);
bool IsWeekend(std::int64_t unix_seconds);
int HourOfWeek(std::int64_t unix_seconds);

}  // namespace dgin

#endif  // DGIN_DATA_BEHAVIOR_H_
