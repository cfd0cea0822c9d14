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
#include <cmath>
#include <map>

#include "dgin/data/kv_config.h"
#include "dgin/error.h"
#include "dgin/model/model.h"
#include "dgin/synth/synthgen.h"
#include "test_util.h"

namespace dgin {
namespace {

using testing_util::TempDir;

GenConfig Medium() {
  GenConfig g;
  g.seed = 21;
  g.n_users = 300;
  g.n_items = 400;
  g.n_categories = 20;
  g.mean_events_per_user = 400;
  g.menu_min = 20;
  g.menu_max = 60;
  g.train_per_user = 10;
  g.test_per_user = 5;
  return g;
}

class SynthTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { data_ = new GeneratedData(Generate(Medium())); }
  static void TearDownTestSuite() { delete data_; }
  static GeneratedData* data_;
};
GeneratedData* SynthTest::data_ = nullptr;

TEST_F(SynthTest, SameSeedSameWorld) {
  GenConfig g = Medium();
  g.n_users = 20;
  const GeneratedData a = Generate(g), b = Generate(g);
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(a.instances, b.instances);
  g.seed += 1;
  EXPECT_NE(Generate(g).events, a.events);
}

TEST_F(SynthTest, UserStreamsAreIndependentOfPopulation) {
  GenConfig g = Medium();
  g.n_users = 5;
  const GeneratedData small = Generate(g);
  g.n_users = 9;
  const GeneratedData large = Generate(g);
  std::vector<UserEvent> first_five;
  for (const UserEvent& e : large.events)
    if (e.user_id <= small.events.back().user_id) first_five.push_back(e);
  EXPECT_EQ(first_five, small.events);
}

TEST_F(SynthTest, PositiveRateNearTarget) {
  double pos = 0;
  for (const Instance& i : data_->instances) pos += i.label;
  const double rate = pos / static_cast<double>(data_->instances.size());
  EXPECT_NEAR(rate, Medium().base_ctr, 0.1 * Medium().base_ctr);
  double mean_p = 0;
  for (const GroundTruth& t : data_->truth) mean_p += t.latent_p;
  EXPECT_NEAR(mean_p / static_cast<double>(data_->truth.size()), Medium().base_ctr, 1e-6);
}

TEST_F(SynthTest, MedianEventsNearMean) {
  std::map<std::int64_t, int> per_user;
  for (const UserEvent& e : data_->events) ++per_user[e.user_id];
  std::vector<int> counts;
  for (const auto& [u, c] : per_user) counts.push_back(c);
  std::nth_element(counts.begin(), counts.begin() + counts.size() / 2, counts.end());
  const double median = counts[counts.size() / 2];
  EXPECT_NEAR(median, Medium().mean_events_per_user, 0.2 * Medium().mean_events_per_user);
}

TEST_F(SynthTest, EventsAreValidChronologicalAndBeforeDecisions) {
  std::map<std::int64_t, std::int64_t> last;
  for (const UserEvent& e : data_->events) {
    EXPECT_EQ(CheckEvent(e.event), "");
    EXPECT_LT(e.event.timestamp, Medium().history_end);
    EXPECT_GE(e.event.timestamp, last[e.user_id]);
    last[e.user_id] = e.event.timestamp;
  }
  for (const Instance& i : data_->instances) {
    EXPECT_GT(i.decision_timestamp, last[i.user_id]);
    EXPECT_EQ(i.context.hour_of_week, HourOfWeek(i.decision_timestamp));
  }
}

TEST_F(SynthTest, LastDaySplitIsTimeOrdered) {
  std::vector<Instance> train, test;
  SplitByLastDay(data_->instances, train, test);
  EXPECT_EQ(test.size(), static_cast<std::size_t>(Medium().n_users * Medium().test_per_user));
  EXPECT_EQ(train.size(), static_cast<std::size_t>(Medium().n_users * Medium().train_per_user));
  EXPECT_NO_THROW(CheckTimeSplit(train, test));
}

TEST_F(SynthTest, TruthIsConsistentWithInstances) {
  ASSERT_EQ(data_->truth.size(), data_->instances.size());
  for (std::size_t i = 0; i < data_->truth.size(); ++i) {
    const GroundTruth& t = data_->truth[i];
    EXPECT_EQ(t.user_id, data_->instances[i].user_id);
    EXPECT_EQ(t.item_id, data_->instances[i].candidate.item_id);
    EXPECT_EQ(t.label, data_->instances[i].label);
    EXPECT_NEAR(t.latent_p, 1.0 / (1.0 + std::exp(-t.logit)), 1e-12);
  }
  EXPECT_EQ(ParseGroundTruthLine(SerializeGroundTruth(data_->truth[3])), data_->truth[3]);
}

TEST_F(SynthTest, OracleAucIsInformative) {
  EXPECT_GT(OracleAuc(data_->truth), 0.75);
  GenConfig flat = Medium();
  flat.n_users = 200;
  flat.w_menu = flat.w_intensity = flat.w_repeat_purchase = flat.w_weekday_pattern = flat.w_decision_habit = 0;
  const GeneratedData noise = Generate(flat);
  EXPECT_NEAR(OracleAuc(noise.truth), 0.5, 1e-12);  // all latent p equal
}

// Removing one component from the latent logit must cost ranking quality.
TEST_F(SynthTest, EveryComponentCarriesSignal) {
  std::vector<double> y, full;
  for (const GroundTruth& t : data_->truth) {
    y.push_back(t.label);
    full.push_back(t.logit);
  }
  const double base = ComputeAuc(full, y);
  for (int c = 0; c < kNumComponents; ++c) {
    std::vector<double> without(full.size());
    for (std::size_t i = 0; i < full.size(); ++i) without[i] = full[i] - data_->truth[i].components[c];
    EXPECT_GT(base - ComputeAuc(without, y), 0.01) << ComponentName(static_cast<Component>(c));
  }
}

TEST(GenConfig, InfeasibleAndUnknownRejected) {
  GenConfig g;
  g.mean_events_per_user = 1e9;
  EXPECT_THROW(g.Validate(), ConfigError);
  g = GenConfig{};
  g.history_end += kSecondsPerDay;  // Tuesday
  EXPECT_THROW(g.Validate(), ConfigError);
  g = GenConfig{};
  g.n_categories = g.n_items + 1;
  EXPECT_THROW(g.Validate(), ConfigError);
  EXPECT_THROW(ParseGenConfig(KeyValues::Parse("n_userz = 3")), ConfigError);
  const GenConfig back = ParseGenConfig(GenConfigValues(Medium()));
  EXPECT_EQ(GenConfigValues(back).ToText(), GenConfigValues(Medium()).ToText());
}

TEST(Generate, WritesFiles) {
  TempDir dir;
  GenConfig g = Medium();
  g.n_users = 3;
  WriteGenerated(dir.path(), g, Generate(g));
  for (const char* f : {"events.jsonl", "instances.jsonl", "truth.jsonl", "gen.cfg"})
    EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;
  EXPECT_EQ(ReadGroundTruth(dir.path() / "truth.jsonl").size(), 3u * (g.train_per_user + g.test_per_user));
}

}  // namespace
}  // namespace dgin
