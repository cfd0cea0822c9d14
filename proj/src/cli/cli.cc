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

#include "dgin/cli/cli.h"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dgin/data/jsonl.h"
#include "dgin/error.h"
#include "dgin/numerics/checkpoint.h"
#include "dgin/synth/synthgen.h"
#include "json.hpp"

namespace dgin {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr char kManifestName[] = "run_manifest.json";

// Flags shared by every command.
struct Common {
  std::string config;
  std::string out;
  std::int64_t seed = -1;
  std::vector<std::string> sets;  // key=value overrides
};

void AddCommon(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--config", c.config, "key = value config file");
  auto* out = cmd->add_option("--out", c.out, "output directory");
  if (out_required) out->required();
  cmd->add_option("--seed", c.seed, "random seed (overrides the config)");
  cmd->add_option("--set", c.sets, "config override key=value (repeatable)");
}

// File values, then --set overrides, then --seed.
KeyValues EffectiveConfig(const Common& c) {
  KeyValues kv = c.config.empty() ? KeyValues{} : KeyValues::ReadFile(c.config);
  for (const std::string& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv.Set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (c.seed >= 0) kv.Set("seed", std::to_string(c.seed));
  return kv;
}

ModelConfig ModelFromKv(const KeyValues& kv, VocabSizes& vocab) {
  kv.RequireKnown(ModelConfigKeys());
  ModelConfig mc;
  ApplyModelConfig(kv, mc, vocab);
  mc.Validate();
  return mc;
}

std::string HashText(const std::string& text) { return HexU64(Fnv1a64(text)); }

json MetricsJson(const MetricReport& m) {
  return {{"auc", m.auc}, {"logloss", m.logloss}, {"n", m.n}, {"positives", m.positives}};
}

json GroupJson(const InterestGroup& g) {
  json counts = json::array();
  for (auto c : g.stats.per_type_counts) counts.push_back(c);
  return {{"interest_key", g.interest_key},
          {"identity",
           {{"item_id", g.identity.item_id},
            {"category_id", g.identity.category_id},
            {"price_cents", g.identity.price_cents}}},
          {"members", g.members.size()},
          {"last_active", g.last_active},
          {"stats",
           {{"total_behaviors", g.stats.total_behaviors},
            {"distinct_types", g.stats.distinct_types},
            {"per_type_counts", counts},
            {"avg_dwell_seconds", g.stats.avg_dwell_seconds},
            {"avg_purchase_cents", g.stats.avg_purchase_cents}}}};
}

// Fails validation unless every instance is clean against the store.
void CheckInstances(std::span<const Instance> instances, const BehaviorStore& store) {
  std::size_t bad = 0;
  std::string first;
  for (const Instance& inst : instances) {
    std::vector<std::string> v = ValidateInstance(inst, store);
    if (v.empty()) continue;
    if (bad++ == 0) first = "user " + std::to_string(inst.user_id) + ": " + v.front();
  }
  if (bad > 0) throw DataError(std::to_string(bad) + " invalid instances, first: " + first);
}

// Cold probes for cache-check when no instance file is given: for each
// user, its first served group as candidate, decided after the store ends.
std::vector<Instance> ProbeInstances(const BehaviorStore& store, std::size_t limit) {
  std::vector<Instance> out;
  for (std::int64_t id : store.UserIds()) {
    if (out.size() >= limit) break;
    Instance inst;
    inst.user_id = id;
    inst.decision_timestamp = store.reference_timestamp() + 1;
    inst.context.hour_of_week = HourOfWeek(inst.decision_timestamp);
    GroupedSequence g = store.Grouped(id);
    if (!g.groups.empty()) {
      inst.candidate.item_id = g.groups.front().identity.item_id;
      inst.candidate.category_id = g.groups.front().identity.category_id;
    }
    out.push_back(inst);
  }
  return out;
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int Gen(const Common& c) {
    const KeyValues kv = EffectiveConfig(c);
    const GenConfig cfg = ParseGenConfig(kv);
    const GeneratedData data = Generate(cfg);
    WriteGenerated(c.out, cfg, data);
    std::vector<Instance> train, test;
    SplitByLastDay(data.instances, train, test);
    std::vector<GroundTruth> test_truth;
    for (const GroundTruth& g : data.truth)
      if (!test.empty() && g.decision_timestamp / kSecondsPerDay == test.front().decision_timestamp / kSecondsPerDay)
        test_truth.push_back(g);
    double positives = 0;
    for (const Instance& i : data.instances) positives += i.label;
    RunManifest m = Start("gen", GenConfigValues(cfg).ToText(), cfg.seed);
    m.summary["events"] = std::to_string(data.events.size());
    m.summary["train_instances"] = std::to_string(train.size());
    m.summary["test_instances"] = std::to_string(test.size());
    m.summary["positive_rate"] = FormatDouble(positives / std::max<double>(1.0, data.instances.size()));
    if (!test.empty()) m.summary["oracle_auc_test"] = FormatDouble(OracleAuc(test_truth));
    Finish(c.out, m);
    return kExitOk;
  }

  int StoreBuild(const Common& c, const std::string& events, const std::string& key, int B, int G, int tail,
                 int window, bool clicks_only) {
    StoreConfig sc{ParseKeyField(key), B, G, tail, window};
    if (B < 1 || G < 1 || tail < 1 || window < 1) throw ConfigError("B, G, tail and window must be positive");
    BehaviorStore store(sc);
    std::size_t rejected = 0;
    ParseReport report = ForEachEvent(events, [&](UserEvent&& e) {
      if (clicks_only && e.event.behavior_type != BehaviorType::kClick) return;
      rejected += store.Update(e).rejected;
    });
    store.Save(c.out);
    std::ostringstream text;
    text << "key=" << key << " B=" << B << " G=" << G << " tail=" << tail << " window=" << window
         << " clicks_only=" << clicks_only;
    RunManifest m = Start("store-build", text.str(), 0);
    m.inputs["events"] = events;
    m.summary["users"] = std::to_string(store.user_count());
    m.summary["rejected_events"] = std::to_string(rejected);
    m.summary["malformed_lines"] = std::to_string(report.malformed);
    Finish(c.out, m);
    return kExitOk;
  }

  int StoreUpdate(const Common& c, const std::string& snapshot, const std::string& events) {
    BehaviorStore store = BehaviorStore::Load(snapshot);
    UpdateReport total;
    ParseReport report = ForEachEvent(events, [&](UserEvent&& e) {
      UpdateReport r = store.Update(e);
      total.accepted += r.accepted;
      total.rejected += r.rejected;
      for (auto& d : r.diagnostics)
        if (total.diagnostics.size() < 10) total.diagnostics.push_back(std::move(d));
    });
    for (const std::string& d : total.diagnostics) err_ << "rejected: " << d << '\n';
    store.Save(c.out);
    RunManifest m = Start("store-update", "", 0);
    m.inputs["snapshot"] = snapshot;
    m.inputs["events"] = events;
    m.summary["accepted"] = std::to_string(total.accepted);
    m.summary["rejected"] = std::to_string(total.rejected);
    m.summary["malformed_lines"] = std::to_string(report.malformed);
    Finish(c.out, m);
    return kExitOk;
  }

  int StoreQuery(const Common& c, const std::string& snapshot, std::int64_t user, const std::string& candidate,
                 int T) {
    const BehaviorStore store = BehaviorStore::Load(snapshot);
    const GroupedSequence g = store.Grouped(user);
    json j = {{"user_id", user}, {"known_user", store.HasUser(user)}, {"group_count", g.groups.size()},
              {"dropped_groups", g.dropped_groups}, {"dropped_behaviors", g.dropped_behaviors}};
    j["groups"] = json::array();
    for (const InterestGroup& grp : g.groups) j["groups"].push_back(GroupJson(grp));
    if (!candidate.empty()) {
      const CandidateItem cand = ParseCandidateJson(candidate);
      const SubsequenceResult sub = store.CandidateSubsequence(user, cand, T);
      j["candidate_key"] = KeyOf(cand, store.config().key_field);
      j["cold_start"] = sub.cold_start;
      j["subsequence"] = json::array();
      for (const BehaviorEvent& e : sub.events) j["subsequence"].push_back(json::parse(SerializeEvent({user, e})));
    }
    out_ << j.dump(2) << '\n';
    if (!c.out.empty()) {
      fs::create_directories(c.out);
      std::ofstream(fs::path(c.out) / "query.json") << j.dump(2) << '\n';
      RunManifest m = Start("store-query", candidate, 0);
      m.inputs["snapshot"] = snapshot;
      Finish(c.out, m);
    }
    return kExitOk;
  }

  // Store and instances from either --data or --snapshot/--instances.
  struct Inputs {
    std::unique_ptr<BehaviorStore> store;
    std::vector<Instance> train, test;
  };

  Inputs LoadInputs(const std::string& data, const std::string& snapshot, const std::string& instances,
                    const StoreConfig& sc) {
    Inputs in;
    if (!data.empty()) {
      Dataset ds = LoadDataset(data);
      in.store = std::make_unique<BehaviorStore>(BuildStore(ds.events, sc));
      in.train = std::move(ds.train);
      in.test = std::move(ds.test);
    } else {
      if (snapshot.empty() || instances.empty()) throw UsageError("need --data, or --snapshot with --instances");
      in.store = std::make_unique<BehaviorStore>(BehaviorStore::Load(snapshot));
      SplitByLastDay(ReadInstances(instances), in.train, in.test);
    }
    return in;
  }

  int Train(const Common& c, const std::string& data, const std::string& snapshot, const std::string& instances,
            int max_steps) {
    const KeyValues kv = EffectiveConfig(c);
    VocabSizes vocab;
    const ModelConfig mc = ModelFromKv(kv, vocab);
    Inputs in = LoadInputs(data, snapshot, instances, StoreConfigFor(mc));
    CheckInstances(in.train, *in.store);
    CheckInstances(in.test, *in.store);
    DginModel model(mc, vocab);
    TrainOptions opt;
    opt.out_dir = fs::path(c.out);
    opt.max_steps = max_steps;
    opt.on_epoch = [&](const EpochReport& r) {
      out_ << "epoch " << r.epoch << " train_logloss " << r.train_logloss << " test_auc " << r.test.auc
           << " test_logloss " << r.test.logloss << " (" << r.wall_seconds << " s)\n";
    };
    std::vector<EpochReport> reps = dgin::Train(model, *in.store, in.train, in.test, opt);
    SaveModel(fs::path(c.out) / "model", model);
    RunManifest m = Start("train", ModelConfigValues(mc, vocab).ToText(), mc.seed);
    m.inputs["data"] = data.empty() ? snapshot + " " + instances : data;
    if (!reps.empty()) {
      m.summary["test_auc"] = FormatDouble(reps.back().test.auc);
      m.summary["test_logloss"] = FormatDouble(reps.back().test.logloss);
    }
    Finish(c.out, m);
    return kExitOk;
  }

  int Eval(const Common& c, const std::string& model_dir, const std::string& data, const std::string& snapshot,
           const std::string& instances) {
    std::unique_ptr<DginModel> model = LoadModel(model_dir);
    Inputs in;
    if (!data.empty()) {
      in = LoadInputs(data, "", "", StoreConfigFor(model->config()));
    } else {
      if (snapshot.empty() || instances.empty()) throw UsageError("need --data, or --snapshot with --instances");
      in.store = std::make_unique<BehaviorStore>(BehaviorStore::Load(snapshot));
      in.test = ReadInstances(instances);
    }
    CheckInstances(in.test, *in.store);
    const MetricReport m = Evaluate(*model, *in.store, in.test);
    json j = MetricsJson(m);
    out_ << j.dump() << '\n';
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / "metrics.json") << j.dump(2) << '\n';
    RunManifest rm = Start("eval", ModelConfigValues(model->config(), model->vocab()).ToText(), model->config().seed);
    rm.inputs["model"] = model_dir;
    rm.summary["auc"] = FormatDouble(m.auc);
    rm.summary["logloss"] = FormatDouble(m.logloss);
    Finish(c.out, rm);
    return kExitOk;
  }

  int Ablate(const Common& c, const std::string& data, int seeds, const std::vector<std::string>& variant_names) {
    const KeyValues kv = EffectiveConfig(c);
    VocabSizes vocab;
    const ModelConfig mc = ModelFromKv(kv, vocab);
    std::vector<Variant> variants;
    for (const std::string& v : variant_names) variants.push_back(ParseVariant(v));
    Dataset ds = LoadDataset(data);
    const BehaviorStore store = BuildStore(ds.events, StoreConfigFor(mc));
    const BehaviorStore clicks = BuildStore(ds.events, StoreConfigFor(mc), true);
    ds.events.clear();
    ds.events.shrink_to_fit();
    CheckInstances(ds.train, store);
    CheckInstances(ds.test, store);
    AblationInputs in{&store, &clicks, ds.train, ds.test};
    std::vector<AblationRow> rows =
        dgin::Ablate(mc, vocab, in, seeds, variants, [&](const std::string& line) { out_ << line << std::endl; });
    json table = json::array();
    for (const AblationRow& r : rows) {
      table.push_back({{"variant", r.label}, {"aucs", r.aucs}, {"loglosses", r.loglosses}, {"mean_auc", r.mean_auc},
                       {"sd_auc", r.sd_auc}, {"mean_logloss", r.mean_logloss}});
      out_ << r.label << ": auc " << r.mean_auc << " +- " << r.sd_auc << ", logloss " << r.mean_logloss << '\n';
    }
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / "ablation.json") << json{{"seeds", seeds}, {"rows", table}}.dump(2) << '\n';
    RunManifest m = Start("ablate", ModelConfigValues(mc, vocab).ToText(), mc.seed);
    m.inputs["data"] = data;
    m.summary["seeds"] = std::to_string(seeds);
    Finish(c.out, m);
    return kExitOk;
  }

  int CacheCheck(const Common& c, const std::string& snapshot, const std::string& ckpt, const std::string& instances,
                 std::size_t limit) {
    const BehaviorStore store = BehaviorStore::Load(snapshot);
    std::unique_ptr<DginModel> model = LoadModel(ckpt);
    if (!model->uses_group_module()) throw UsageError("cache-check needs a variant with the group module");
    std::vector<Instance> probes = instances.empty() ? ProbeInstances(store, limit) : ReadInstances(instances);
    if (probes.size() > limit) probes.resize(limit);
    if (probes.empty()) throw DataError("cache-check: no instances to probe");

    GroupCache cache;
    for (std::int64_t id : store.UserIds()) cache.Put(id, model->ComputeGroupRows(store, id));
    if (!c.out.empty()) {
      cache.Save(fs::path(c.out) / "eg_cache");
      cache = GroupCache::Load(fs::path(c.out) / "eg_cache");
    }
    std::size_t mismatches = 0;
    for (std::size_t begin = 0; begin < probes.size(); begin += 256) {
      const std::size_t n = std::min<std::size_t>(256, probes.size() - begin);
      const PreparedBatch batch = model->Prepare(store, std::span(probes).subspan(begin, n));
      Tape fresh_tape, cached_tape;
      const auto fresh = model->Forward(fresh_tape, batch);
      const auto cached = model->Forward(cached_tape, batch, &cache);
      const ValueGrid& a = fresh_tape.Value(fresh.logits);
      const ValueGrid& b = cached_tape.Value(cached.logits);
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::memcmp(&a.data()[i], &b.data()[i], sizeof(double)) != 0) ++mismatches;
      }
    }
    out_ << "cache-check: " << probes.size() << " predictions, " << mismatches << " differ\n";
    if (!c.out.empty()) {
      RunManifest m = Start("cache-check", "", model->config().seed);
      m.inputs["snapshot"] = snapshot;
      m.inputs["ckpt"] = ckpt;
      m.summary["predictions"] = std::to_string(probes.size());
      m.summary["mismatches"] = std::to_string(mismatches);
      Finish(c.out, m);
    }
    return mismatches == 0 ? kExitOk : kExitValidation;
  }

 private:
  RunManifest Start(const std::string& command, const std::string& config_text, std::uint64_t seed) {
    RunManifest m;
    m.command = command;
    m.config_hash = HashText(config_text);
    m.seed = seed;
    return m;
  }

  void Finish(const std::string& dir, RunManifest& m) {
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    WriteRunManifest(dir, m);
  }

  std::ostream& out_;
  std::ostream& err_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

Dataset LoadDataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.events = ReadEventLog(dir / "events.jsonl");
  SplitByLastDay(ReadInstances(dir / "instances.jsonl"), ds.train, ds.test);
  return ds;
}

StoreConfig StoreConfigFor(const ModelConfig& config) {
  StoreConfig sc;
  sc.key_field = config.key_field;
  sc.max_members = config.B;
  sc.max_groups = config.G;
  sc.tail_capacity = std::max(sc.tail_capacity, config.T);
  sc.recent_capacity = std::max(sc.recent_capacity, config.baseline_window);
  return sc;
}

BehaviorStore BuildStore(const std::vector<UserEvent>& events, const StoreConfig& config, bool clicks_only) {
  BehaviorStore store(config);
  if (!clicks_only) {
    store.Update(events);
    return store;
  }
  std::vector<UserEvent> clicks;
  for (const UserEvent& e : events)
    if (e.event.behavior_type == BehaviorType::kClick) clicks.push_back(e);
  store.Update(clicks);
  return store;
}

std::string ContentHash(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string body = buf.str();
  std::string blob = "blob " + std::to_string(body.size());
  blob.push_back('\0');
  blob += body;
  return HexU64(Fnv1a64(blob));
}

void WriteRunManifest(const std::filesystem::path& dir, RunManifest m) {
  std::filesystem::create_directories(dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() != kManifestName) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) m.outputs[fs::relative(f, dir).generic_string()] = ContentHash(f);
  const json j = {{"command", m.command}, {"config_hash", m.config_hash}, {"seed", m.seed},
                  {"inputs", m.inputs},   {"outputs", m.outputs},         {"summary", m.summary},
                  {"wall_seconds", m.wall_seconds}};
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + (dir / kManifestName).string());
}

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep Group Interest Network tools"};
  app.require_subcommand(1);
  Common common;
  std::string events, snapshot, key = "item_id", candidate, data, instances, model_dir, ckpt;
  int B = 8, G = 64, tail = 50, window = 50, T = 50, seeds = 5, max_steps = -1;
  std::size_t limit = 512;
  bool clicks_only = false;
  std::int64_t user = 0;
  std::vector<std::string> variants;

  auto* gen = app.add_subcommand("gen", "generate synthetic events, instances and ground truth");
  AddCommon(gen, common, true);

  auto* build = app.add_subcommand("store-build", "build a behavior store snapshot from an event log");
  AddCommon(build, common, true);
  build->add_option("--events", events, "event log (JSON-lines)")->required();
  build->add_option("--key", key, "item_id or category_id");
  build->add_option("--B", B, "members per group");
  build->add_option("--G", G, "served groups per user");
  build->add_option("--tail", tail, "full events kept per group");
  build->add_option("--window", window, "recent raw events kept per user");
  build->add_flag("--clicks-only", clicks_only, "ingest click events only");

  auto* update = app.add_subcommand("store-update", "stream new events into a snapshot");
  AddCommon(update, common, true);
  update->add_option("--snapshot", snapshot, "snapshot directory")->required();
  update->add_option("--events", events, "event log (JSON-lines)")->required();

  auto* query = app.add_subcommand("store-query", "print a user's groups and candidate subsequence");
  AddCommon(query, common, false);
  query->add_option("--snapshot", snapshot, "snapshot directory")->required();
  query->add_option("--user", user, "user id")->required();
  query->add_option("--candidate", candidate, "candidate JSON object");
  query->add_option("--T", T, "subsequence length");

  auto* train = app.add_subcommand("train", "train a model");
  AddCommon(train, common, true);
  train->add_option("--data", data, "generated data directory");
  train->add_option("--snapshot", snapshot, "snapshot directory (with --instances)");
  train->add_option("--instances", instances, "instance file (with --snapshot)");
  train->add_option("--max-steps", max_steps, "stop after this many optimizer steps");

  auto* eval = app.add_subcommand("eval", "evaluate a trained model");
  AddCommon(eval, common, true);
  eval->add_option("--model", model_dir, "model directory")->required();
  eval->add_option("--data", data, "generated data directory (test split)");
  eval->add_option("--snapshot", snapshot, "snapshot directory (with --instances)");
  eval->add_option("--instances", instances, "instance file (with --snapshot)");

  auto* ablate = app.add_subcommand("ablate", "train every variant over several seeds");
  AddCommon(ablate, common, true);
  ablate->add_option("--data", data, "generated data directory")->required();
  ablate->add_option("--seeds", seeds, "number of seeds");
  ablate->add_option("--variants", variants, "comma-separated subset of variants (default: all)")->delimiter(',');

  auto* cache = app.add_subcommand("cache-check", "compare cached-e_g predictions with fresh ones");
  AddCommon(cache, common, false);
  cache->add_option("--snapshot", snapshot, "snapshot directory")->required();
  cache->add_option("--ckpt", ckpt, "model directory")->required();
  cache->add_option("--instances", instances, "instance file (default: one probe per user)");
  cache->add_option("--limit", limit, "maximum number of predictions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  Runner run(out, err);
  try {
    if (*gen) return run.Gen(common);
    if (*build) return run.StoreBuild(common, events, key, B, G, tail, window, clicks_only);
    if (*update) return run.StoreUpdate(common, snapshot, events);
    if (*query) return run.StoreQuery(common, snapshot, user, candidate, T);
    if (*train) return run.Train(common, data, snapshot, instances, max_steps);
    if (*eval) return run.Eval(common, model_dir, data, snapshot, instances);
    if (*ablate) return run.Ablate(common, data, seeds, variants);
    if (*cache) return run.CacheCheck(common, snapshot, ckpt, instances, limit);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "validation failure: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace dgin
