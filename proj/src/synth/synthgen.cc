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

#include "dgin/synth/synthgen.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <unordered_set>

#include "dgin/data/jsonl.h"
#include "dgin/error.h"
#include "dgin/model/model.h"
#include "dgin/numerics/parameter.h"
#include "json.hpp"

namespace dgin {
namespace {

using nlohmann::json;

// Separate random streams so that, for example, label draws never shift the
// event history.
enum Stream : std::uint64_t { kCatalog = 1, kProfile = 2, kEvents = 3, kDrafts = 4 };

// Mean events produced by one visit, averaged over the item traits.
constexpr double kEventsPerVisit = 2.46;

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 StreamRng(std::uint64_t seed, Stream stream, std::int64_t user) {
  return std::mt19937_64(SplitMix(SplitMix(seed ^ (stream * 0x632be59bd9b4e019ULL)) + static_cast<std::uint64_t>(user)));
}

// Uniform integer in [lo, hi].
std::int64_t UniformInt(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const double span = static_cast<double>(hi - lo + 1);
  return std::min(hi, lo + static_cast<std::int64_t>(UnitUniform(rng) * span));
}

bool Bernoulli(std::mt19937_64& rng, double p) { return UnitUniform(rng) < p; }

double StandardNormal(std::mt19937_64& rng) {
  const double u1 = 1.0 - UnitUniform(rng);  // (0, 1]
  const double u2 = UnitUniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double LogNormal(std::mt19937_64& rng, double median, double sigma) {
  return median * std::exp(sigma * StandardNormal(rng));
}

// Index drawn from an increasing cumulative weight table.
std::size_t DrawCdf(std::mt19937_64& rng, const std::vector<double>& cdf) {
  const double x = UnitUniform(rng) * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::int64_t Dwell(double seconds) { return std::max<std::int64_t>(0, std::llround(seconds)); }

}  // namespace

void GenConfig::Validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("gen config: " + msg); };
  if (n_users < 1 || n_items < 1 || n_categories < 1 || n_locations < 1 || n_segments < 1 || n_age_bands < 1 ||
      n_surfaces < 1) {
    fail("counts must be positive");
  }
  if (n_items < n_categories) fail("n_items must be at least n_categories");
  if (horizon_days < 7) fail("horizon_days must be at least 7");
  if (!(mean_events_per_user >= 1.0)) fail("mean_events_per_user must be at least 1");
  if (mean_events_per_user > static_cast<double>(horizon_days) * kMaxEventsPerDay) {
    fail("mean_events_per_user exceeds the horizon capacity of " + std::to_string(kMaxEventsPerDay) +
         " events per day");
  }
  if (!(events_sigma >= 0.0) || !(zipf_exponent >= 0.0)) fail("events_sigma and zipf_exponent must be nonnegative");
  if (menu_min < 1 || menu_max < menu_min || menu_max > n_items) fail("need 1 <= menu_min <= menu_max <= n_items");
  if (!(explore_rate >= 0.0 && explore_rate < 1.0)) fail("explore_rate must be in [0, 1)");
  if (!(in_menu_rate >= 0.0 && in_menu_rate <= 1.0)) fail("in_menu_rate must be in [0, 1]");
  if (recent_visits < 0 || train_per_user < 0 || test_per_user < 0) fail("per-user counts must be nonnegative");
  if (!(base_ctr > 0.0 && base_ctr < 1.0)) fail("base_ctr must be in (0, 1)");
  for (double w : {w_menu, w_intensity, w_repeat_purchase, w_weekday_pattern, w_decision_habit}) {
    if (!(w >= 0.0)) fail("signal weights must be nonnegative");
  }
  if (history_end <= static_cast<std::int64_t>(horizon_days) * kSecondsPerDay || history_end % kSecondsPerDay != 0 ||
      DayOfWeek(history_end) != 0) {
    fail("history_end must be a Monday 00:00 UTC after the horizon start");
  }
}

const std::vector<std::string>& GenConfigKeys() {
  static const std::vector<std::string> kKeys = {
      "seed",          "n_users",        "n_items",          "n_categories",       "n_locations",
      "n_segments",    "n_age_bands",    "n_surfaces",       "horizon_days",       "mean_events_per_user",
      "events_sigma",  "menu_min",       "menu_max",         "zipf_exponent",      "explore_rate",
      "recent_visits", "train_per_user", "test_per_user",    "in_menu_rate",       "base_ctr",
      "w_menu",        "w_intensity",    "w_repeat_purchase", "w_weekday_pattern", "w_decision_habit",
      "history_end"};
  return kKeys;
}

GenConfig ParseGenConfig(const KeyValues& kv) {
  kv.RequireKnown(GenConfigKeys());
  GenConfig c;
  auto get_int = [&](const char* key, int& out) { out = static_cast<int>(kv.GetInt(key, out)); };
  c.seed = static_cast<std::uint64_t>(kv.GetInt("seed", static_cast<std::int64_t>(c.seed)));
  get_int("n_users", c.n_users);
  get_int("n_items", c.n_items);
  get_int("n_categories", c.n_categories);
  get_int("n_locations", c.n_locations);
  get_int("n_segments", c.n_segments);
  get_int("n_age_bands", c.n_age_bands);
  get_int("n_surfaces", c.n_surfaces);
  get_int("horizon_days", c.horizon_days);
  c.mean_events_per_user = kv.GetDouble("mean_events_per_user", c.mean_events_per_user);
  c.events_sigma = kv.GetDouble("events_sigma", c.events_sigma);
  get_int("menu_min", c.menu_min);
  get_int("menu_max", c.menu_max);
  c.zipf_exponent = kv.GetDouble("zipf_exponent", c.zipf_exponent);
  c.explore_rate = kv.GetDouble("explore_rate", c.explore_rate);
  get_int("recent_visits", c.recent_visits);
  get_int("train_per_user", c.train_per_user);
  get_int("test_per_user", c.test_per_user);
  c.in_menu_rate = kv.GetDouble("in_menu_rate", c.in_menu_rate);
  c.base_ctr = kv.GetDouble("base_ctr", c.base_ctr);
  c.w_menu = kv.GetDouble("w_menu", c.w_menu);
  c.w_intensity = kv.GetDouble("w_intensity", c.w_intensity);
  c.w_repeat_purchase = kv.GetDouble("w_repeat_purchase", c.w_repeat_purchase);
  c.w_weekday_pattern = kv.GetDouble("w_weekday_pattern", c.w_weekday_pattern);
  c.w_decision_habit = kv.GetDouble("w_decision_habit", c.w_decision_habit);
  c.history_end = kv.GetInt("history_end", c.history_end);
  c.Validate();
  return c;
}

KeyValues GenConfigValues(const GenConfig& c) {
  KeyValues kv;
  kv.Set("seed", std::to_string(c.seed));
  kv.Set("n_users", std::to_string(c.n_users));
  kv.Set("n_items", std::to_string(c.n_items));
  kv.Set("n_categories", std::to_string(c.n_categories));
  kv.Set("n_locations", std::to_string(c.n_locations));
  kv.Set("n_segments", std::to_string(c.n_segments));
  kv.Set("n_age_bands", std::to_string(c.n_age_bands));
  kv.Set("n_surfaces", std::to_string(c.n_surfaces));
  kv.Set("horizon_days", std::to_string(c.horizon_days));
  kv.Set("mean_events_per_user", FormatDouble(c.mean_events_per_user));
  kv.Set("events_sigma", FormatDouble(c.events_sigma));
  kv.Set("menu_min", std::to_string(c.menu_min));
  kv.Set("menu_max", std::to_string(c.menu_max));
  kv.Set("zipf_exponent", FormatDouble(c.zipf_exponent));
  kv.Set("explore_rate", FormatDouble(c.explore_rate));
  kv.Set("recent_visits", std::to_string(c.recent_visits));
  kv.Set("train_per_user", std::to_string(c.train_per_user));
  kv.Set("test_per_user", std::to_string(c.test_per_user));
  kv.Set("in_menu_rate", FormatDouble(c.in_menu_rate));
  kv.Set("base_ctr", FormatDouble(c.base_ctr));
  kv.Set("w_menu", FormatDouble(c.w_menu));
  kv.Set("w_intensity", FormatDouble(c.w_intensity));
  kv.Set("w_repeat_purchase", FormatDouble(c.w_repeat_purchase));
  kv.Set("w_weekday_pattern", FormatDouble(c.w_weekday_pattern));
  kv.Set("w_decision_habit", FormatDouble(c.w_decision_habit));
  kv.Set("history_end", std::to_string(c.history_end));
  return kv;
}

std::string_view ComponentName(Component c) {
  switch (c) {
    case Component::kMenu:
      return "menu";
    case Component::kIntensity:
      return "intensity";
    case Component::kRepeatPurchase:
      return "repeat_purchase";
    case Component::kWeekdayPattern:
      return "weekday_pattern";
    case Component::kDecisionHabit:
      return "decision_habit";
  }
  return "?";
}

std::string SerializeGroundTruth(const GroundTruth& g) {
  json comp = json::object();
  for (int i = 0; i < kNumComponents; ++i) comp[std::string(ComponentName(static_cast<Component>(i)))] = g.components[i];
  json j = {{"user_id", g.user_id},   {"item_id", g.item_id}, {"decision_timestamp", g.decision_timestamp},
            {"latent_p", g.latent_p}, {"logit", g.logit},     {"components", comp},
            {"label", g.label}};
  return j.dump();
}

GroundTruth ParseGroundTruthLine(const std::string& line) {
  try {
    const json j = json::parse(line);
    GroundTruth g;
    g.user_id = j.at("user_id").get<std::int64_t>();
    g.item_id = j.at("item_id").get<std::int64_t>();
    g.decision_timestamp = j.at("decision_timestamp").get<std::int64_t>();
    g.latent_p = j.at("latent_p").get<double>();
    g.logit = j.at("logit").get<double>();
    for (int i = 0; i < kNumComponents; ++i) {
      g.components[i] = j.at("components").at(std::string(ComponentName(static_cast<Component>(i)))).get<double>();
    }
    g.label = j.at("label").get<int>();
    if (g.label != 0 && g.label != 1) throw DataError("label must be 0 or 1");
    return g;
  } catch (const json::exception& e) {
    throw DataError(std::string("ground truth line: ") + e.what());
  }
}

std::vector<GroundTruth> ReadGroundTruth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<GroundTruth> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(ParseGroundTruthLine(line));
  }
  return out;
}

void WriteGroundTruth(const std::filesystem::path& path, const std::vector<GroundTruth>& truth) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const GroundTruth& g : truth) out << SerializeGroundTruth(g) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

SyntheticWorld::SyntheticWorld(const GenConfig& config) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng = StreamRng(config_.seed, kCatalog, 0);
  catalog_.resize(static_cast<std::size_t>(config_.n_items));
  for (ItemInfo& item : catalog_) {
    item.category_id = UniformInt(rng, 0, config_.n_categories - 1);
    item.price_cents = std::max<std::int64_t>(50, std::llround(LogNormal(rng, 1500.0, 0.6)));
  }
  // Calibrate the intercept so the mean latent probability is base_ctr.
  std::vector<double> logits;
  for (std::int64_t u = 0; u < config_.n_users; ++u) {
    for (const Draft& d : Drafts(Profile(u))) logits.push_back(d.truth.logit);
  }
  if (logits.empty()) return;
  double lo = -30.0, hi = 30.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (double z : logits) mean += Sigmoid(mid + z);
    mean /= static_cast<double>(logits.size());
    (mean < config_.base_ctr ? lo : hi) = mid;
  }
  intercept_ = 0.5 * (lo + hi);
}

UserProfile SyntheticWorld::Profile(std::int64_t user_id) const {
  std::mt19937_64 rng = StreamRng(config_.seed, kProfile, user_id);
  UserProfile p;
  p.user_id = user_id;
  p.features.segment = UniformInt(rng, 0, config_.n_segments - 1);
  p.features.age_band = UniformInt(rng, 0, config_.n_age_bands - 1);
  p.home_cell = UniformInt(rng, 0, config_.n_locations - 1);
  p.work_cell = UniformInt(rng, 0, config_.n_locations - 1);

  const int menu_size = static_cast<int>(UniformInt(rng, config_.menu_min, config_.menu_max));
  std::unordered_set<std::int64_t> chosen;
  std::vector<double> cdf;
  double acc = 0.0;
  while (static_cast<int>(p.menu.size()) < menu_size) {
    const std::int64_t item = UniformInt(rng, 0, config_.n_items - 1);
    if (!chosen.insert(item).second) continue;
    MenuItem m;
    m.item_id = item;
    m.intense = Bernoulli(rng, 0.5);
    m.buyer = Bernoulli(rng, 0.5);
    const double r = UnitUniform(rng);
    m.day_pattern = r < 0.25 ? 1 : (r < 0.5 ? -1 : 0);
    m.habit = Bernoulli(rng, 0.5) ? 1 : -1;
    p.menu.push_back(m);
    acc += std::pow(static_cast<double>(p.menu.size()), -config_.zipf_exponent);
    cdf.push_back(acc);
  }

  const double sigma = config_.events_sigma;
  const double events = std::max(
      10.0, config_.mean_events_per_user * std::exp(sigma * StandardNormal(rng) - 0.5 * sigma * sigma));
  const int visits = std::max(1, static_cast<int>(std::lround(events / kEventsPerVisit)));
  for (int v = 0; v < visits; ++v) {
    if (Bernoulli(rng, config_.explore_rate)) {
      p.explore_items.push_back(UniformInt(rng, 0, config_.n_items - 1));
    } else {
      ++p.menu[DrawCdf(rng, cdf)].visits;
    }
  }
  return p;
}

BehaviorSequence SyntheticWorld::Events(const UserProfile& profile) const {
  std::mt19937_64 rng = StreamRng(config_.seed, kEvents, profile.user_id);
  const std::int64_t start = config_.history_end - static_cast<std::int64_t>(config_.horizon_days) * kSecondsPerDay;
  BehaviorSequence seq;
  seq.user_id = profile.user_id;

  // One visit: a click followed by a funnel of optional micro-behaviors.
  auto visit = [&](std::int64_t item, std::int64_t ts, bool intense, bool buyer, double click_dwell) {
    const ItemInfo& info = catalog_[static_cast<std::size_t>(item)];
    const int hour = static_cast<int>((ts - start) % kSecondsPerDay / 3600);
    const bool at_work = !IsWeekend(ts) && hour >= 9 && hour < 18;
    BehaviorEvent e;
    e.item_id = item;
    e.category_id = info.category_id;
    e.location_cell = at_work ? profile.work_cell : profile.home_cell;
    e.timestamp = ts;
    e.behavior_type = BehaviorType::kClick;
    e.dwell_seconds = Dwell(click_dwell);
    seq.events.push_back(e);
    auto follow = [&](BehaviorType type, double p, double dwell_median, std::int64_t price) {
      if (!Bernoulli(rng, p)) return;
      e.timestamp += e.dwell_seconds + UniformInt(rng, 1, 5);
      e.behavior_type = type;
      e.dwell_seconds = Dwell(LogNormal(rng, dwell_median, 0.5));
      e.price_cents = price;
      seq.events.push_back(e);
    };
    follow(BehaviorType::kBrowseDishes, 0.5, 15.0, 0);
    follow(BehaviorType::kViewComments, 0.3, 15.0, 0);
    follow(BehaviorType::kAddToFavorite, intense ? 0.35 : 0.04, 2.0, 0);
    follow(BehaviorType::kAddToCart, intense ? 0.5 : 0.05, 2.0, 0);
    follow(BehaviorType::kPurchase, buyer ? 0.35 : 0.03, 1.0, info.price_cents);
  };
  auto visit_time = [&](int day_pattern) {
    std::int64_t day_start = 0;
    for (;;) {
      day_start = start + UniformInt(rng, 0, config_.horizon_days - 1) * kSecondsPerDay;
      const bool weekend = IsWeekend(day_start);
      if (day_pattern == 0 || (day_pattern > 0) != weekend) break;
    }
    return day_start + UniformInt(rng, 7, 21) * 3600 + UniformInt(rng, 0, 3599);
  };

  std::vector<std::int64_t> times;
  for (const MenuItem& m : profile.menu) {
    times.clear();
    for (int v = 0; v < m.visits; ++v) times.push_back(visit_time(m.day_pattern));
    std::sort(times.begin(), times.end());
    for (int v = 0; v < m.visits; ++v) {
      const bool recent = v >= m.visits - config_.recent_visits;
      const double median = !recent ? 35.0 : (m.habit > 0 ? 150.0 : 6.0);
      visit(m.item_id, times[v], m.intense, m.buyer, LogNormal(rng, median, 0.5));
    }
  }
  for (std::int64_t item : profile.explore_items) visit(item, visit_time(0), false, false, LogNormal(rng, 35.0, 0.5));
  std::stable_sort(seq.events.begin(), seq.events.end(),
                   [](const BehaviorEvent& a, const BehaviorEvent& b) { return a.timestamp < b.timestamp; });
  return seq;
}

std::vector<SyntheticWorld::Draft> SyntheticWorld::Drafts(const UserProfile& profile) const {
  std::mt19937_64 rng = StreamRng(config_.seed, kDrafts, profile.user_id);
  std::vector<double> cdf;
  std::vector<const MenuItem*> visited;
  double acc = 0.0;
  for (const MenuItem& m : profile.menu) {
    if (m.visits == 0) continue;
    visited.push_back(&m);
    acc += std::sqrt(static_cast<double>(m.visits));
    cdf.push_back(acc);
  }
  std::unordered_set<std::int64_t> in_menu;
  for (const MenuItem& m : profile.menu) in_menu.insert(m.item_id);

  std::vector<Draft> drafts;
  const int total = config_.train_per_user + config_.test_per_user;
  for (int k = 0; k < total; ++k) {
    Draft d;
    Instance& inst = d.instance;
    const std::int64_t day = k < config_.train_per_user ? UniformInt(rng, 0, 3) : 4;
    const std::int64_t hour = UniformInt(rng, 8, 21);
    inst.user_id = profile.user_id;
    inst.user = profile.features;
    inst.decision_timestamp = config_.history_end + day * kSecondsPerDay + hour * 3600 + UniformInt(rng, 0, 3599);
    inst.context.hour_of_week = HourOfWeek(inst.decision_timestamp);
    inst.context.surface = UniformInt(rng, 0, config_.n_surfaces - 1);

    const MenuItem* m = nullptr;
    std::int64_t item = 0;
    if (!visited.empty() && Bernoulli(rng, config_.in_menu_rate)) {
      m = visited[DrawCdf(rng, cdf)];
      item = m->item_id;
    } else {
      for (int tries = 0; tries < 50; ++tries) {
        item = UniformInt(rng, 0, config_.n_items - 1);
        if (!in_menu.count(item)) break;
      }
    }
    const ItemInfo& info = catalog_[static_cast<std::size_t>(item)];
    inst.candidate.item_id = item;
    inst.candidate.category_id = info.category_id;
    inst.candidate.price_cents = info.price_cents;
    inst.candidate.location_cell = hour >= 9 && hour < 18 ? profile.work_cell : profile.home_cell;

    GroundTruth& g = d.truth;
    g.user_id = profile.user_id;
    g.item_id = item;
    g.decision_timestamp = inst.decision_timestamp;
    if (m != nullptr) {
      g.components[static_cast<int>(Component::kMenu)] = config_.w_menu;
      g.components[static_cast<int>(Component::kIntensity)] = config_.w_intensity * (m->intense ? 1.0 : -1.0);
      g.components[static_cast<int>(Component::kRepeatPurchase)] = config_.w_repeat_purchase * (m->buyer ? 1.0 : -1.0);
      // Decision days are weekdays, so weekday habits raise the odds.
      g.components[static_cast<int>(Component::kWeekdayPattern)] = config_.w_weekday_pattern * m->day_pattern;
      g.components[static_cast<int>(Component::kDecisionHabit)] = config_.w_decision_habit * m->habit;
    }
    for (double c : g.components) g.logit += c;
    d.u = UnitUniform(rng);
    drafts.push_back(d);
  }
  std::stable_sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    return a.instance.decision_timestamp < b.instance.decision_timestamp;
  });
  return drafts;
}

void SyntheticWorld::Instances(const UserProfile& profile, std::vector<Instance>& instances,
                               std::vector<GroundTruth>& truth) const {
  for (Draft& d : Drafts(profile)) {
    d.truth.logit += intercept_;
    d.truth.latent_p = Sigmoid(d.truth.logit);
    d.truth.label = d.u < d.truth.latent_p ? 1 : 0;
    d.instance.label = d.truth.label;
    instances.push_back(d.instance);
    truth.push_back(d.truth);
  }
}

GeneratedData Generate(const GenConfig& config) {
  SyntheticWorld world(config);
  GeneratedData out;
  for (std::int64_t u = 0; u < config.n_users; ++u) {
    const UserProfile profile = world.Profile(u);
    for (BehaviorEvent& e : world.Events(profile).events) out.events.push_back(UserEvent{u, e});
    world.Instances(profile, out.instances, out.truth);
  }
  return out;
}

void WriteGenerated(const std::filesystem::path& dir, const GenConfig& config, const GeneratedData& data) {
  std::filesystem::create_directories(dir);
  WriteEventLog(dir / "events.jsonl", data.events);
  WriteInstances(dir / "instances.jsonl", data.instances);
  WriteGroundTruth(dir / "truth.jsonl", data.truth);
  std::ofstream cfg(dir / "gen.cfg", std::ios::trunc);
  cfg << GenConfigValues(config).ToText();
  if (!cfg) throw IoError("cannot write " + (dir / "gen.cfg").string());
}

void SplitByLastDay(std::span<const Instance> instances, std::vector<Instance>& train, std::vector<Instance>& test) {
  if (instances.empty()) return;
  auto day = [](const Instance& i) { return i.decision_timestamp / kSecondsPerDay; };
  std::int64_t last = day(instances[0]);
  for (const Instance& i : instances) last = std::max(last, day(i));
  for (const Instance& i : instances) (day(i) == last ? test : train).push_back(i);
}

double OracleAuc(std::span<const GroundTruth> truth) {
  std::vector<double> p, y;
  for (const GroundTruth& g : truth) {
    p.push_back(g.latent_p);
    y.push_back(static_cast<double>(g.label));
  }
  return ComputeAuc(p, y);
}

}  // namespace dgin
