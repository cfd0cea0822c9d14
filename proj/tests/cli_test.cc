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
#include "json.hpp"
#include <sstream>

#include "dgin/cli/cli.h"
#include "dgin/data/jsonl.h"
#include "dgin/store/behavior_store.h"
#include "test_util.h"

namespace dgin {
namespace {

using nlohmann::json;
using testing_util::TempDir;
namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result Dgin(std::vector<std::string> args) {
  args.insert(args.begin(), "dgin");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

json ReadJson(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

const std::string kModelSets[] = {"--set", "d=4",          "--set", "B=3",         "--set", "G=6",
                                  "--set", "T=4",          "--set", "mlp_widths=8,1", "--set", "epochs=1",
                                  "--set", "batch_size=32", "--set", "user_chunk=4"};

std::vector<std::string> With(std::vector<std::string> args, bool model_sets = true) {
  if (model_sets) args.insert(args.end(), std::begin(kModelSets), std::end(kModelSets));
  return args;
}

// One small generated dataset shared by the suite.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new TempDir;
    const Result r = Dgin({"gen", "--out", (root_->path() / "data").string(), "--set", "n_users=12", "--set",
                          "n_items=80", "--set", "n_categories=8", "--set", "mean_events_per_user=150", "--set",
                          "menu_min=5", "--set", "menu_max=15", "--set", "train_per_user=6", "--set",
                          "test_per_user=2"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { delete root_; }
  static fs::path Data() { return root_->path() / "data"; }
  static TempDir* root_;
  TempDir dir_;
};
TempDir* CliTest::root_ = nullptr;

TEST(CliErrors, UsageAndConfigErrorsExitTwo) {
  EXPECT_EQ(Dgin({}).code, kExitUsage);
  EXPECT_EQ(Dgin({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Dgin({"gen"}).code, kExitUsage);  // --out missing
  TempDir d;
  EXPECT_EQ(Dgin({"gen", "--out", d.path().string(), "--set", "bogus_key=1"}).code, kExitUsage);
  EXPECT_EQ(Dgin({"gen", "--out", d.path().string(), "--config", "/nonexistent.cfg"}).code, kExitUsage);
  EXPECT_EQ(Dgin({"store-build", "--out", d.path().string(), "--events", "/nonexistent.jsonl"}).code, kExitUsage);
  EXPECT_EQ(Dgin({"store-build", "--out", d.path().string(), "--events", "x", "--key", "shop"}).code, kExitUsage);
}

TEST_F(CliTest, GenWritesManifestDeterministically) {
  const json a = ReadJson(Data() / "run_manifest.json");
  EXPECT_EQ(a["command"], "gen");
  EXPECT_EQ(a["outputs"].size(), 4u);
  EXPECT_EQ(a["outputs"]["events.jsonl"], ContentHash(Data() / "events.jsonl"));
  const Result r = Dgin({"gen", "--out", (dir_.path() / "again").string(), "--config", (Data() / "gen.cfg").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json b = ReadJson(dir_.path() / "again" / "run_manifest.json");
  EXPECT_EQ(a["outputs"], b["outputs"]);
  EXPECT_EQ(a["config_hash"], b["config_hash"]);
  EXPECT_EQ(a["summary"], b["summary"]);
}

TEST_F(CliTest, StreamingUpdateEqualsSingleBuild) {
  const auto events = ReadEventLog(Data() / "events.jsonl");
  std::int64_t lo = events.front().event.timestamp, hi = lo;
  for (const auto& e : events) lo = std::min(lo, e.event.timestamp), hi = std::max(hi, e.event.timestamp);
  const std::int64_t cut = lo + (hi - lo) / 2;
  std::vector<UserEvent> first, second;
  for (const auto& e : events) (e.event.timestamp < cut ? first : second).push_back(e);
  WriteEventLog(dir_.path() / "a.jsonl", first);
  WriteEventLog(dir_.path() / "b.jsonl", second);
  const std::string p = dir_.path().string();
  ASSERT_EQ(Dgin({"store-build", "--events", (Data() / "events.jsonl").string(), "--out", p + "/full"}).code, 0);
  ASSERT_EQ(Dgin({"store-build", "--events", p + "/a.jsonl", "--out", p + "/s1"}).code, 0);
  const Result up = Dgin({"store-update", "--snapshot", p + "/s1", "--events", p + "/b.jsonl", "--out", p + "/s2"});
  ASSERT_EQ(up.code, 0) << up.err;
  EXPECT_TRUE(BehaviorStore::Load(p + "/s2") == BehaviorStore::Load(p + "/full"));
  EXPECT_EQ(ReadJson(p + "/s2/run_manifest.json")["summary"]["rejected"], "0");

  const Result q = Dgin({"store-query", "--snapshot", p + "/full", "--user", "1", "--candidate",
                        "{\"item_id\":" + std::to_string(events.front().event.item_id) +
                            ",\"category_id\":0,\"price_cents\":0,\"location_cell\":0}", "--T", "3"});
  ASSERT_EQ(q.code, 0) << q.err;
  const json j = json::parse(q.out);
  EXPECT_TRUE(j["known_user"].get<bool>());
  EXPECT_GT(j["group_count"].get<int>(), 0);
  EXPECT_LE(j["subsequence"].size(), 3u);
}

TEST_F(CliTest, TrainEvalAndCacheCheck) {
  const std::string p = dir_.path().string();
  const Result t = Dgin(With({"train", "--data", Data().string(), "--out", p + "/run", "--max-steps", "4"}));
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(fs::exists(p + "/run/model/model.cfg"));
  EXPECT_TRUE(fs::exists(p + "/run/metrics.jsonl"));
  const Result e = Dgin({"eval", "--model", p + "/run/model", "--data", Data().string(), "--out", p + "/eval"});
  ASSERT_EQ(e.code, 0) << e.err;
  const json m = ReadJson(p + "/eval/metrics.json");
  EXPECT_EQ(m["n"], 24);
  EXPECT_GE(m["auc"].get<double>(), 0.0);

  ASSERT_EQ(Dgin({"store-build", "--events", (Data() / "events.jsonl").string(), "--B", "3", "--G", "6", "--out",
                 p + "/snap"})
                .code,
            0);
  const Result c = Dgin({"cache-check", "--snapshot", p + "/snap", "--ckpt", p + "/run/model", "--instances",
                        (Data() / "instances.jsonl").string(), "--out", p + "/cache"});
  EXPECT_EQ(c.code, 0) << c.out << c.err;
  EXPECT_NE(c.out.find(" 0 differ"), std::string::npos);
  // The model wants B=3, G=6; a default store does not match.
  ASSERT_EQ(Dgin({"store-build", "--events", (Data() / "events.jsonl").string(), "--out", p + "/snap8"}).code, 0);
  EXPECT_EQ(Dgin({"cache-check", "--snapshot", p + "/snap8", "--ckpt", p + "/run/model"}).code, kExitUsage);
}

TEST_F(CliTest, LeakingInstancesFailValidation) {
  const std::string p = dir_.path().string();
  ASSERT_EQ(Dgin({"store-build", "--events", (Data() / "events.jsonl").string(), "--B", "3", "--G", "6", "--out",
                 p + "/snap"})
                .code,
            0);
  std::vector<Instance> inst = ReadInstances(Data() / "instances.jsonl");
  for (Instance& i : inst) i.decision_timestamp -= 30 * kSecondsPerDay;
  WriteInstances(p + "/leaky.jsonl", inst);
  const Result r =
      Dgin(With({"train", "--snapshot", p + "/snap", "--instances", p + "/leaky.jsonl", "--out", p + "/run"}));
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("invalid instances"), std::string::npos);
}

TEST_F(CliTest, AblateReportsEveryVariant) {
  const std::string p = dir_.path().string();
  const Result r = Dgin(With({"ablate", "--data", Data().string(), "--seeds", "1", "--out", p + "/abl"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = ReadJson(p + "/abl/ablation.json");
  ASSERT_EQ(j["rows"].size(), 6u);
  EXPECT_EQ(j["rows"][0]["variant"], "simple");
  EXPECT_EQ(j["rows"][5]["variant"], "truncated_baseline");
  const Result sub = Dgin(With({"ablate", "--data", Data().string(), "--seeds", "1", "--variants",
                               "simple,truncated_baseline", "--out", p + "/abl2"}));
  ASSERT_EQ(sub.code, 0) << sub.err;
  EXPECT_EQ(ReadJson(p + "/abl2/ablation.json")["rows"].size(), 2u);
}

}  // namespace
}  // namespace dgin
