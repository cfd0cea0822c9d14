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

// Runs the acceptance checks and prints one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 1 3 10     a subset
//
// Exits 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dgin/cli/cli.h"
#include "dgin/data/kv_config.h"
#include "dgin/model/model.h"
#include "dgin/synth/synthgen.h"
#include "fixtures.h"
#include "test_util.h"

namespace dgin {
namespace {

using testing_util::GradientCheck;
using testing_util::MakeWorld;
using testing_util::RandomGrid;
using testing_util::SmallGenConfig;
using testing_util::TempDir;
using testing_util::TinyModelConfig;
using testing_util::World;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string Fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::filesystem::path ConfigPath(const std::string& name) {
  return std::filesystem::path(DGIN_SOURCE_DIR) / "configs" / name;
}

// 1. Backprop against central differences on a tiny model, every variant.
Outcome GradientCriterion() {
  double worst = 0;
  int checked = 0;
  for (KeyField key : {KeyField::kItemId, KeyField::kCategoryId}) {
    for (Variant v : AllVariants()) {
      if (key == KeyField::kCategoryId && v != Variant::kFull) continue;
      const ModelConfig mc = TinyModelConfig(v, key);
      World w = MakeWorld(SmallGenConfig(4), mc);
      DginModel model(mc, VocabSizes{});
      std::vector<Instance> batch(w.train.begin(), w.train.begin() + 2);
      const auto r = GradientCheck(model, model.Prepare(*w.store, batch));
      worst = std::max(worst, r.max_rel_error);
      checked += r.checked;
    }
  }
  return {worst < 1e-4, "max relative error " + Fmt(worst, 3) + " over " + std::to_string(checked) + " entries"};
}

// 2. Four weekly streaming batches reproduce a full rebuild.
Outcome StreamingCriterion() {
  GenConfig g;
  g.n_users = 1000;
  g.mean_events_per_user = 1000;
  const GeneratedData data = Generate(g);
  const std::int64_t cut = g.history_end - 4 * 7 * kSecondsPerDay;
  std::vector<UserEvent> base;
  std::vector<std::vector<UserEvent>> weeks(4);
  for (const UserEvent& e : data.events) {
    if (e.event.timestamp < cut) {
      base.push_back(e);
    } else {
      weeks[(e.event.timestamp - cut) / (7 * kSecondsPerDay)].push_back(e);
    }
  }
  const StoreConfig sc;
  const auto start = Clock::now();
  BehaviorStore streamed(sc);
  streamed.Update(base);
  std::size_t streamed_events = 0;
  for (const auto& w : weeks) {
    streamed_events += w.size();
    if (streamed.Update(w).rejected != 0) return {false, "events rejected while streaming"};
  }
  BehaviorStore rebuilt(sc);
  rebuilt.Update(data.events);
  const double secs = Seconds(start);
  const bool equal = streamed == rebuilt;
  return {equal && secs < 60.0, std::string(equal ? "identical" : "DIFFERENT") + " stores for " +
                                    std::to_string(rebuilt.user_count()) + " users, " +
                                    std::to_string(streamed_events) + " streamed events, " + Fmt(secs, 3) + " s"};
}

ValueGrid NaiveAttention(const ValueGrid& q, const ValueGrid& k, const ValueGrid& v, int heads) {
  const int dk = q.cols() / heads, dv = v.cols() / heads;
  ValueGrid out(q.rows(), v.cols());
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < q.rows(); ++i) {
      std::vector<double> s(k.rows());
      for (int j = 0; j < k.rows(); ++j) {
        for (int c = 0; c < dk; ++c) s[j] += q(i, h * dk + c) * k(j, h * dk + c);
        s[j] /= std::sqrt(static_cast<double>(dk));
      }
      const double mx = *std::max_element(s.begin(), s.end());
      double z = 0;
      for (double& x : s) z += (x = std::exp(x - mx));
      for (int j = 0; j < k.rows(); ++j)
        for (int c = 0; c < dv; ++c) out(i, h * dv + c) += s[j] / z * v(j, h * dv + c);
    }
  }
  return out;
}

ValueGrid NaiveMatMul(const ValueGrid& a, const ValueGrid& b) {
  ValueGrid c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j)
      for (int k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

// 3. Packed attention kernels and the group-module target attention against
// loops written from the definition.
Outcome AttentionCriterion() {
  std::mt19937_64 rng(99);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int heads = 1 + trial % 4, nq = 1 + trial % 6, nk = 1 + trial % 9;
    const ValueGrid q = RandomGrid(nq, 4 * heads, rng, 2.0), k = RandomGrid(nk, 4 * heads, rng, 2.0),
                    v = RandomGrid(nk, 3 * heads, rng);
    Tape t;
    const AttentionSegment seg{0, nq, 0, nk};
    const ValueGrid& got = t.Value(ad::Attention(t, t.Constant(q), t.Constant(k), t.Constant(v), heads,
                                                 std::span(&seg, 1)));
    worst = std::max(worst, MaxAbsDiff(got, NaiveAttention(q, k, v, heads)));
  }
  ParameterSet params;
  GroupModuleConfig gc;
  gc.d = 4;
  gc.heads = 2;
  GroupModule gm(gc, params, rng);
  gm.null_interest().value = RandomGrid(1, gc.group_width(), rng);
  const AttentionParams& a = gm.target_attention();
  for (int trial = 0; trial < 20; ++trial) {
    const int groups = 1 + trial % 7;
    const ValueGrid cand = RandomGrid(1, gc.candidate_width(), rng);
    const ValueGrid e = RandomGrid(groups, gc.group_width(), rng);
    ValueGrid keys(groups + 1, gc.group_width());
    std::copy(e.values().begin(), e.values().end(), keys.data());
    std::copy(gm.null_interest().value.values().begin(), gm.null_interest().value.values().end(),
              keys.row(groups));
    const ValueGrid want =
        NaiveMatMul(NaiveAttention(NaiveMatMul(cand, a.wq->value), NaiveMatMul(keys, a.wk->value),
                                   NaiveMatMul(keys, a.wv->value), a.heads),
                    a.wo->value);
    Tape t;
    const std::vector<RowRange> range = {{0, groups}};
    worst = std::max(worst, MaxAbsDiff(t.Value(gm.Mhta(t, t.Constant(cand), t.Constant(e), range)), want));
  }

  // Intra-group self-attention.
  for (int trial = 0; trial < 10; ++trial) {
    const int members = 1 + trial % 5;
    const ValueGrid e_b = RandomGrid(members, gc.member_width(), rng);
    const AttentionParams& s = gm.self_attention();
    const ValueGrid want =
        NaiveMatMul(NaiveAttention(NaiveMatMul(e_b, s.wq->value), NaiveMatMul(e_b, s.wk->value),
                                   NaiveMatMul(e_b, s.wv->value), s.heads),
                    s.wo->value);
    Tape t;
    const std::vector<std::uint8_t> mask(members, 1);
    worst = std::max(worst, MaxAbsDiff(t.Value(gm.Mhsa(t, t.Constant(e_b), mask)), want));
  }
  // Target module encoder-decoder.
  ParameterSet tm_params;
  TargetModuleConfig tc;
  tc.d = 4;
  tc.heads = 2;
  TargetModule tm(tc, tm_params, rng);
  for (Parameter* p : tm_params.All()) p->value = RandomGrid(p->rows(), p->cols(), rng, 0.5);
  auto add = [](ValueGrid a, const ValueGrid& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
    return a;
  };
  auto bias = [](ValueGrid a, const Parameter* b) {
    for (int r = 0; r < a.rows(); ++r)
      for (int c = 0; c < a.cols(); ++c) a(r, c) += b->value(0, c);
    return a;
  };
  auto norm = [&](const ValueGrid& x, int i) {
    ValueGrid out(x.rows(), x.cols());
    for (int r = 0; r < x.rows(); ++r) {
      double mean = 0, var = 0;
      for (int c = 0; c < x.cols(); ++c) mean += x(r, c) / x.cols();
      for (int c = 0; c < x.cols(); ++c) var += (x(r, c) - mean) * (x(r, c) - mean) / x.cols();
      for (int c = 0; c < x.cols(); ++c)
        out(r, c) = (x(r, c) - mean) / std::sqrt(var + 1e-5) * tm.ln(i).gain->value(0, c) + tm.ln(i).shift->value(0, c);
    }
    return out;
  };
  auto ffn = [&](const ValueGrid& x, const FeedForwardParams& f) {
    ValueGrid h = bias(NaiveMatMul(x, f.w1->value), f.b1);
    for (double& v : h.values()) v = std::max(v, 0.0);
    return bias(NaiveMatMul(h, f.w2->value), f.b2);
  };
  auto mha = [&](const AttentionParams& a, const ValueGrid& q, const ValueGrid& kv) {
    return NaiveMatMul(NaiveAttention(NaiveMatMul(q, a.wq->value), NaiveMatMul(kv, a.wk->value),
                                      NaiveMatMul(kv, a.wv->value), a.heads),
                       a.wo->value);
  };
  for (int trial = 0; trial < 10; ++trial) {
    const int len = 1 + trial % 4;
    const ValueGrid e_t = RandomGrid(len, tc.behavior_width(), rng);
    const ValueGrid cand = RandomGrid(1, tc.candidate_width(), rng);
    const ValueGrid enc_pre = norm(add(e_t, mha(tm.encoder_attention(), e_t, e_t)), 0);
    const ValueGrid enc = norm(add(enc_pre, ffn(enc_pre, tm.encoder_ffn())), 1);
    const ValueGrid c = bias(NaiveMatMul(cand, tm.projection_weight().value), &tm.projection_bias());
    const ValueGrid dec_pre = norm(add(c, mha(tm.decoder_attention(), c, enc)), 2);
    const ValueGrid want = norm(add(dec_pre, ffn(dec_pre, tm.decoder_ffn())), 3);
    Tape t;
    const std::vector<RowRange> seq = {{0, len}};
    const std::vector<int> query = {0};
    worst = std::max(worst, MaxAbsDiff(t.Value(tm.Forward(t, t.Constant(e_t), seq, t.Constant(cand), query).interest),
                                       want));
  }
  return {worst <= 1e-10, "attention, mhta, mhsa and target module: max abs difference " + Fmt(worst, 3) +
                              " over 90 cases"};
}

// 4. Heavy users: many events collapse into few groups.
Outcome ShapeCriterion() {
  GenConfig g;
  g.mean_events_per_user = 8000;
  const GeneratedData data = Generate(g);
  StoreConfig sc;
  sc.max_groups = 1 << 20;
  BehaviorStore store(sc);
  store.Update(data.events);
  std::vector<double> groups, events;
  for (std::int64_t u : store.UserIds()) {
    groups.push_back(static_cast<double>(store.User(u)->all_groups().size()));
    events.push_back(static_cast<double>(store.User(u)->total_ingested()));
  }
  auto p95 = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[static_cast<std::size_t>(std::ceil(0.95 * v.size())) - 1];
  };
  double mean = 0;
  for (double e : events) mean += e / events.size();
  const double pg = p95(groups), pe = p95(events);
  return {pg <= 500 && pe >= 5000, "p95 groups " + Fmt(pg, 6) + ", p95 events " + Fmt(pe, 6) + ", mean events " +
                                       Fmt(mean, 6) + " over " + std::to_string(events.size()) + " users"};
}

// Shared by criteria 5 to 7: the ablation world and its results.
struct AblationRun {
  bool done = false;
  GeneratedData data;
  std::vector<Instance> train, test;
  ModelConfig base;
  VocabSizes vocab;
  std::map<Variant, AblationRow> rows;
  double seconds = 0;
  int seeds = 5;
};

AblationRun& Ablation() {
  static AblationRun run;
  if (run.done) return run;
  run.done = true;
  const GenConfig g = ParseGenConfig(KeyValues::ReadFile(ConfigPath("gen_ablation.cfg")));
  run.data = Generate(g);
  SplitByLastDay(run.data.instances, run.train, run.test);
  const KeyValues kv = KeyValues::ReadFile(ConfigPath("model_ablation.cfg"));
  ApplyModelConfig(kv, run.base, run.vocab);
  const auto start = Clock::now();
  const BehaviorStore store = BuildStore(run.data.events, StoreConfigFor(run.base));
  const BehaviorStore clicks = BuildStore(run.data.events, StoreConfigFor(run.base), true);
  const AblationInputs in{&store, &clicks, run.train, run.test};
  for (AblationRow& r : Ablate(run.base, run.vocab, in, run.seeds, {}, [](const std::string& line) {
         std::cerr << "  " << line << std::endl;
       })) {
    run.rows[r.variant] = r;
  }
  run.seconds = Seconds(start);
  return run;
}

// 5. Each rung of the ladder adds AUC and everything beats the baseline.
Outcome LadderCriterion() {
  AblationRun& run = Ablation();
  const std::vector<Variant> ladder = {Variant::kSimple, Variant::kStats, Variant::kAgg, Variant::kFull};
  bool ok = run.train.size() == 50000 && run.test.size() == 10000 && run.seconds <= 3600;
  std::string detail;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const double auc = run.rows[ladder[i]].mean_auc;
    detail += std::string(VariantName(ladder[i])) + " " + Fmt(auc) + (i + 1 < ladder.size() ? " < " : "");
    if (i > 0 && auc - run.rows[ladder[i - 1]].mean_auc < 0.005) ok = false;
  }
  const double base = run.rows[Variant::kTruncatedBaseline].mean_auc;
  for (const auto& [v, r] : run.rows)
    if (v != Variant::kTruncatedBaseline && r.mean_auc <= base) ok = false;
  detail += "; baseline " + Fmt(base) + "; " + std::to_string(run.train.size()) + "/" +
            std::to_string(run.test.size()) + " instances, " + std::to_string(run.seeds) + " seeds, " +
            Fmt(run.seconds / 60, 3) + " min";
  return {ok, detail};
}

// 6. Multi-behavior groups beat click-only groups.
Outcome ClickOnlyCriterion() {
  AblationRun& run = Ablation();
  const double full = run.rows[Variant::kFull].mean_auc, clicks = run.rows[Variant::kClickOnly].mean_auc;
  return {full - clicks >= 0.005, "full " + Fmt(full) + " vs click_only " + Fmt(clicks) + " (gap " +
                                      Fmt(full - clicks, 3) + ")"};
}

// 7. Grouping by category still beats the baseline; grouping by item is at
// least as good.
Outcome CategoryCriterion() {
  AblationRun& run = Ablation();
  constexpr int kCategorySeeds = 2;
  ModelConfig cfg = run.base;
  cfg.key_field = KeyField::kCategoryId;
  const BehaviorStore store = BuildStore(run.data.events, StoreConfigFor(cfg));
  const AblationInputs in{&store, nullptr, run.train, run.test};
  const std::vector<Variant> full = {Variant::kFull};
  const AblationRow cat = Ablate(cfg, run.vocab, in, kCategorySeeds, full, [](const std::string& line) {
                            std::cerr << "  category " << line << std::endl;
                          }).front();
  // Same seeds as the item-keyed runs.
  double item = 0;
  for (int k = 0; k < kCategorySeeds; ++k) item += run.rows[Variant::kFull].aucs[k] / kCategorySeeds;
  const double base = run.rows[Variant::kTruncatedBaseline].mean_auc;
  return {cat.mean_auc > base && item >= cat.mean_auc,
          "item " + Fmt(item) + " >= category " + Fmt(cat.mean_auc) + " > baseline " + Fmt(base) + " (" +
              std::to_string(kCategorySeeds) + " seeds)"};
}

// 8. The full model can memorize a small set.
Outcome OverfitCriterion() {
  ModelConfig mc;
  mc.d = 8;
  mc.B = 8;
  mc.G = 16;
  mc.T = 10;
  mc.variant = Variant::kFull;
  mc.mlp_widths = {64, 32, 1};
  mc.batch_size = 64;
  mc.user_chunk = 64;
  mc.lr = 1e-2;
  mc.epochs = 300;
  World w = MakeWorld(SmallGenConfig(16), mc);
  std::vector<Instance> set(w.train.begin(), w.train.begin() + 64);
  DginModel model(mc, VocabSizes{});
  TrainOptions opt;
  opt.max_steps = 300;
  Train(model, *w.store, set, {}, opt);
  const MetricReport m = Evaluate(model, *w.store, set);
  return {m.logloss < 0.05, "train logloss " + Fmt(m.logloss, 3) + " after 300 steps on 64 instances"};
}

// 9. The command-line cache check is bit-exact.
Outcome CacheCriterion() {
  TempDir dir;
  const std::string p = dir.path().string();
  std::ostringstream out, err;
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "dgin");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  if (run({"gen", "--config", ConfigPath("gen_small.cfg").string(), "--out", p + "/data"}) != 0 ||
      run({"train", "--config", ConfigPath("model_ablation.cfg").string(), "--set", "epochs=1", "--data",
           p + "/data", "--out", p + "/run"}) != 0 ||
      run({"store-build", "--events", p + "/data/events.jsonl", "--G", "64", "--B", "8", "--tail", "50", "--out",
           p + "/snap"}) != 0) {
    return {false, "setup failed: " + err.str()};
  }
  const int code = run({"cache-check", "--snapshot", p + "/snap", "--ckpt", p + "/run/model", "--instances",
                        p + "/data/instances.jsonl", "--out", p + "/cache"});
  std::string line = out.str();
  line = line.substr(line.rfind("cache-check:"));
  if (!line.empty() && line.back() == '\n') line.pop_back();
  return {code == 0, "exit " + std::to_string(code) + ", " + line};
}

// 10. Metric implementations against brute force.
Outcome MetricCriterion() {
  std::mt19937_64 rng(10);
  double worst_auc = 0, worst_loss = 0;
  for (int batch = 0; batch < 100; ++batch) {
    const int n = 2 + static_cast<int>(UnitUniform(rng) * 300);
    std::vector<double> s(n), y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = batch % 3 == 0 ? std::floor(UnitUniform(rng) * 10) / 10 : UnitUniform(rng);
      y[i] = UnitUniform(rng) < 0.3;
    }
    y[0] = 1, y[1] = 0;
    double good = 0, pairs = 0, loss = 0;
    for (int i = 0; i < n; ++i) {
      const double p = std::clamp(s[i], 1e-12, 1 - 1e-12);
      loss += y[i] ? -std::log(p) : -std::log(1 - p);
      if (!y[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (y[j]) continue;
        pairs += 1;
        good += s[i] > s[j] ? 1 : (s[i] == s[j] ? 0.5 : 0);
      }
    }
    worst_auc = std::max(worst_auc, std::abs(ComputeAuc(s, y) - good / pairs));
    worst_loss = std::max(worst_loss, std::abs(BatchLoss(s, y) - loss / n));
  }
  return {worst_auc <= 1e-12 && worst_loss <= 1e-12,
          "max AUC difference " + Fmt(worst_auc, 3) + ", max loss difference " + Fmt(worst_loss, 3) + " over 100 batches"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace dgin

int main(int argc, char** argv) {
  using namespace dgin;
  const std::vector<Criterion> all = {
      {1, "gradient check", GradientCriterion},
      {2, "streaming equals rebuild", StreamingCriterion},
      {3, "attention oracle", AttentionCriterion},
      {4, "heavy-user group shape", ShapeCriterion},
      {5, "ablation ladder", LadderCriterion},
      {6, "multi-behavior beats click-only", ClickOnlyCriterion},
      {7, "category-keyed groups", CategoryCriterion},
      {8, "overfit 64 instances", OverfitCriterion},
      {9, "cache-check bit-exact", CacheCriterion},
      {10, "metrics oracle", MetricCriterion},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && selected.count(c.id) == 0) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                Seconds(start));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
