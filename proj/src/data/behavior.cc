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

#include "dgin/data/behavior.h"

#include <array>

namespace dgin {
namespace {

constexpr std::array<std::string_view, kNumBehaviorTypes> kNames = {
    "click", "add_to_cart", "add_to_favorite", "browse_dishes", "view_comments", "purchase"};

std::int64_t FloorDiv(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::string_view BehaviorTypeName(BehaviorType t) { return kNames.at(static_cast<std::size_t>(t)); }

std::optional<BehaviorType> ParseBehaviorType(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<BehaviorType>(i);
  return std::nullopt;
}

std::string CheckEvent(const BehaviorEvent& e) {
  if (static_cast<int>(e.behavior_type) >= kNumBehaviorTypes)
    return "behavior_type out of range";
  if (e.timestamp <= 0) return "timestamp must be positive";
  if (e.price_cents < 0) return "price_cents must be nonnegative";
  if (e.price_cents > 0 && e.behavior_type != BehaviorType::kPurchase)
    return "price_cents > 0 on a non-purchase event";
  if (e.dwell_seconds < 0) return "dwell_seconds must be nonnegative";
  if (e.item_id < 0 || e.category_id < 0 || e.location_cell < 0) return "negative categorical id";
  return {};
}

int DayOfWeek(std::int64_t unix_seconds) {
  // 1970-01-01 was a Thursday.
  const std::int64_t day = FloorDiv(unix_seconds, kSecondsPerDay);
  return static_cast<int>(((day + 3) % 7 + 7) % 7);
}

bool IsWeekend(std::int64_t unix_seconds) { return DayOfWeek(unix_seconds) >= 5; }

int HourOfWeek(std::int64_t unix_seconds) {
  const std::int64_t sec_of_day = unix_seconds - FloorDiv(unix_seconds, kSecondsPerDay) * kSecondsPerDay;
  return DayOfWeek(unix_seconds) * 24 + static_cast<int>(sec_of_day / 3600);
}

}  // namespace dgin
