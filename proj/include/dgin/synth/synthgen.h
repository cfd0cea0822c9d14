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

#ifndef DGIN_SYNTH_SYNTHGEN_H_
#define DGIN_SYNTH_SYNTHGEN_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dgin/data/behavior.h"
#include "dgin/data/kv_config.h"

namespace dgin {

// Generator settings. Decision days are the five days that start at
// history_end (a Monday 00:00 UTC): Monday to Thursday produce training
// instances, Friday produces test instances.
struct GenConfig {
  std::uint64_t seed = 7;
  int n_users = 200;
  int n_items = 1000;
  int n_categories = 50;
  int n_locations = 64;
  int n_segments = 8;
  int n_age_bands = 8;
  int n_surfaces = 4;
  int horizon_days = 364;
  double mean_events_per_user = 2000.0;
  double events_sigma = 0.25;  // log-normal spread of per-user event counts
  int menu_min = 40;
  int menu_max = 120;
  double zipf_exponent = 1.1;
  double explore_rate = 0.02;  // share of visits to items outside the menu
  int recent_visits = 5;       // visits whose dwell carries the habit signal
  int train_per_user = 25;
  int test_per_user = 5;
  double in_menu_rate = 0.75;  // share of candidates drawn from the menu
  double base_ctr = 0.25;
  double w_menu = 1.5;
  double w_intensity = 0.8;
  double w_repeat_purchase = 0.8;
  double w_weekday_pattern = 0.8;
  double w_decision_habit = 0.8;
  std::int64_t history_end = 1672617600;  // 2023-01-02, a Monday

  // Throws ConfigError on an invalid or infeasible configuration.
  void Validate() const;
};

const std::vector<std::string>& GenConfigKeys();
// Unknown keys throw ConfigError.
GenConfig ParseGenConfig(const KeyValues& kv);
KeyValues GenConfigValues(const GenConfig& config);

// Most events a user can have over the horizon.
inline constexpr int kMaxEventsPerDay = 1000;

enum class Component { kMenu, kIntensity, kRepeatPurchase, kWeekdayPattern, kDecisionHabit };
inline constexpr int kNumComponents = 5;
std::string_view ComponentName(Component c);

// Latent facts behind one instance.
struct GroundTruth {
  std::int64_t user_id = 0;
  std::int64_t item_id = 0;
  std::int64_t decision_timestamp = 0;
  double latent_p = 0.0;
  double logit = 0.0;
  std::array<double, kNumComponents> components{};  // logit contribution each
  int label = 0;
  bool operator==(const GroundTruth&) const = default;
};

std::string SerializeGroundTruth(const GroundTruth& g);
GroundTruth ParseGroundTruthLine(const std::string& line);
std::vector<GroundTruth> ReadGroundTruth(const std::filesystem::path& path);
void WriteGroundTruth(const std::filesystem::path& path, const std::vector<GroundTruth>& truth);

// Per-item latent traits of one user's menu entry.
struct MenuItem {
  std::int64_t item_id = 0;
  int visits = 0;
  bool intense = false;         // many carts and favorites per visit
  bool buyer = false;           // frequent purchases
  int day_pattern = 0;          // +1 weekdays only, -1 weekends only, 0 any day
  int habit = 0;                // +1 long or -1 short dwell on recent visits
};

struct UserProfile {
  std::int64_t user_id = 0;
  UserFeatures features;
  std::int64_t home_cell = 0;
  std::int64_t work_cell = 0;
  std::vector<MenuItem> menu;
  std::vector<std::int64_t> explore_items;  // one entry per exploration visit
};

struct ItemInfo {
  std::int64_t category_id = 0;
  std::int64_t price_cents = 0;
};

class SyntheticWorld {
 public:
  explicit SyntheticWorld(const GenConfig& config);

  const GenConfig& config() const { return config_; }
  const std::vector<ItemInfo>& catalog() const { return catalog_; }

  UserProfile Profile(std::int64_t user_id) const;
  // Chronological history ending before history_end.
  BehaviorSequence Events(const UserProfile& profile) const;
  // Instances paired with their ground truth; labels use the calibrated
  // intercept.
  void Instances(const UserProfile& profile, std::vector<Instance>& instances,
                 std::vector<GroundTruth>& truth) const;
  double intercept() const { return intercept_; }

 private:
  struct Draft {
    Instance instance;
    GroundTruth truth;
    double u = 0.0;  // label uniform
  };
  std::vector<Draft> Drafts(const UserProfile& profile) const;

  GenConfig config_;
  std::vector<ItemInfo> catalog_;
  double intercept_ = 0.0;
};

struct GeneratedData {
  std::vector<UserEvent> events;  // ascending user, chronological per user
  std::vector<Instance> instances;
  std::vector<GroundTruth> truth;
};

GeneratedData Generate(const GenConfig& config);
// Writes events.jsonl, instances.jsonl, truth.jsonl and gen.cfg into dir.
void WriteGenerated(const std::filesystem::path& dir, const GenConfig& config, const GeneratedData& data);

// Splits at the last decision day: instances on the final day are test.
void SplitByLastDay(std::span<const Instance> instances, std::vector<Instance>& train, std::vector<Instance>& test);

// AUC of the latent probabilities against the realized labels.
double OracleAuc(std::span<const GroundTruth> truth);

}  // namespace dgin

#endif  // DGIN_SYNTH_SYNTHGEN_H_
