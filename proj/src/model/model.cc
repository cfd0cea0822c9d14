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

#include "dgin/model/model.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "dgin/error.h"
#include "dgin/numerics/checkpoint.h"

namespace dgin {
namespace {

constexpr double kProbClamp = 1e-12;

template <typename T>
void Shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(UnitUniform(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

std::vector<Field> ToVector(std::span<const Field> f) { return {f.begin(), f.end()}; }

bool HasStats(Variant v) { return v != Variant::kSimple && v != Variant::kTruncatedBaseline; }
bool HasAgg(Variant v) { return v == Variant::kAgg || v == Variant::kFull || v == Variant::kClickOnly; }
bool HasTm(Variant v) { return v == Variant::kFull || v == Variant::kClickOnly; }

double Elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

const std::vector<Variant>& AllVariants() {
  static const std::vector<Variant> kAll = {Variant::kSimple,    Variant::kStats,     Variant::kAgg,
                                            Variant::kFull,      Variant::kClickOnly, Variant::kTruncatedBaseline};
  return kAll;
}

std::string_view VariantName(Variant v) {
  switch (v) {
    case Variant::kSimple:
      return "simple";
    case Variant::kStats:
      return "simple+stats";
    case Variant::kAgg:
      return "simple+stats+agg";
    case Variant::kFull:
      return "full";
    case Variant::kClickOnly:
      return "click_only";
    case Variant::kTruncatedBaseline:
      return "truncated_baseline";
  }
  return "?";
}

Variant ParseVariant(std::string_view name) {
  for (Variant v : AllVariants())
    if (VariantName(v) == name) return v;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

void ModelConfig::Validate() const {
  if (d < 1 || heads < 1 || B < 1 || G < 1 || T < 1 || baseline_window < 1) {
    throw ConfigError("model config: d, heads, B, G, T and baseline_window must be positive");
  }
  if ((3 * d) % heads != 0) {
    throw ConfigError("model config: h=" + std::to_string(heads) + " does not divide 3d=" + std::to_string(3 * d));
  }
  if (mlp_widths.empty() || mlp_widths.back() != 1) throw ConfigError("model config: mlp_widths must end in 1");
  for (int w : mlp_widths)
    if (w < 1) throw ConfigError("model config: mlp widths must be positive");
  if (!(lr >= 0.0) || batch_size < 1 || user_chunk < 1 || epochs < 0) {
    throw ConfigError("model config: need lr >= 0, batch_size >= 1, user_chunk >= 1, epochs >= 0");
  }
}

std::string ModelConfig::Signature() const {
  std::ostringstream out;
  out << "d=" << d << " heads=" << heads << " B=" << B << " G=" << G << " T=" << T << " window=" << baseline_window
      << " key=" << KeyFieldName(key_field) << " variant=" << VariantName(variant) << " mlp=";
  for (int w : mlp_widths) out << w << ',';
  return out.str();
}

DginModel::DginModel(const ModelConfig& config, const VocabSizes& vocab) : config_(config), vocab_(vocab) {
  config_.Validate();
  std::mt19937_64 rng(config_.seed);
  const int d = config_.d;
  emb_ = std::make_unique<Embeddings>(Schema::Standard(vocab, config_.key_field), d, params_, rng);
  layout_ = {{"user", 0, 2 * d}, {"context", 2 * d, 4 * d}, {"candidate", 4 * d, 8 * d}};
  int width = 8 * d;
  const Variant v = config_.variant;
  if (v != Variant::kTruncatedBaseline) {
    GroupModuleConfig gc;
    gc.d = d;
    gc.heads = config_.heads;
    gc.category_mode = config_.key_field == KeyField::kCategoryId;
    gc.use_stats = HasStats(v);
    gc.use_agg = HasAgg(v);
    gm_ = std::make_unique<GroupModule>(gc, params_, rng);
    layout_.push_back({"interest_gm", width, width + gc.group_width()});
    width += gc.group_width();
  }
  if (HasTm(v)) {
    tm_ = std::make_unique<TargetModule>(TargetModuleConfig{d, config_.heads}, params_, rng);
    layout_.push_back({"interest_tm", width, width + 7 * d});
    width += 7 * d;
  }
  if (v == Variant::kTruncatedBaseline) {
    base_attn_ = AttentionParams::Create(params_, "base/mhta", 4 * d, 7 * d, 7 * d, config_.heads, rng);
    base_null_ = &params_.Create("base/null_interest", 1, 7 * d, Init::kZeros, rng);
    layout_.push_back({"interest_base", width, width + 7 * d});
    width += 7 * d;
  }
  int in = width;
  for (std::size_t i = 0; i < config_.mlp_widths.size(); ++i) {
    const int out = config_.mlp_widths[i];
    mlp_w_.push_back(&params_.Create("mlp/w" + std::to_string(i), in, out, Init::kGlorotUniform, rng));
    mlp_b_.push_back(&params_.Create("mlp/b" + std::to_string(i), 1, out, Init::kZeros, rng));
    in = out;
  }
}

std::uint64_t DginModel::SchemaHash() const {
  return Fnv1a64(emb_->schema().ManifestText() + "\n" + config_.Signature());
}

PreparedBatch DginModel::Prepare(const BehaviorStore& store, std::span<const Instance> instances) const {
  const StoreConfig& sc = store.config();
  if (sc.key_field != config_.key_field || sc.max_members != config_.B || sc.max_groups != config_.G) {
    throw ConfigError("store (key " + std::string(KeyFieldName(sc.key_field)) + ", B=" +
                      std::to_string(sc.max_members) + ", G=" + std::to_string(sc.max_groups) +
                      ") does not match model (" + config_.Signature() + ")");
  }
  const Embeddings& emb = *emb_;
  const std::int64_t ref = store.reference_timestamp();
  PreparedBatch b;
  b.n = instances.size();
  b.user_idx.resize(2);
  b.context_idx.resize(2);
  b.candidate_idx.resize(4);
  b.subseq_idx.resize(7);
  b.recent_idx.resize(7);
  std::map<std::int64_t, std::size_t> user_slot;
  std::map<std::pair<std::int64_t, std::int64_t>, int> seq_slot;
  std::vector<const InterestGroup*> groups;
  int group_rows = 0;
  int recent_rows = 0;
  int seq_rows = 0;
  for (const Instance& inst : instances) {
    b.labels.push_back(static_cast<double>(inst.label));
    AppendRow(b.user_idx, emb.UserIndices(inst.user));
    AppendRow(b.context_idx, emb.ContextIndices(inst.context));
    AppendRow(b.candidate_idx, emb.CandidateIndices(inst.candidate));
    const UserRecord* rec = store.User(inst.user_id);
    if (rec == nullptr) ++b.cold_start;
    auto [it, fresh] = user_slot.try_emplace(inst.user_id, b.users.size());
    if (fresh) {
      b.users.push_back(inst.user_id);
      RowRange gr{group_rows, group_rows};
      if (gm_ != nullptr && rec != nullptr) {
        for (const InterestGroup* g : rec->Served()) groups.push_back(g);
        group_rows = static_cast<int>(groups.size());
        gr.end = group_rows;
      }
      b.user_group_rows.push_back(gr);
      RowRange rr{recent_rows, recent_rows};
      if (base_null_ != nullptr && rec != nullptr) {
        const auto& recent = rec->recent();
        const std::size_t take = std::min(recent.size(), static_cast<std::size_t>(config_.baseline_window));
        for (auto e = recent.end() - static_cast<std::ptrdiff_t>(take); e != recent.end(); ++e) {
          AppendRow(b.recent_idx, emb.BehaviorIndices(*e, ref));
          ++recent_rows;
        }
        rr.end = recent_rows;
      }
      b.recent_ranges.push_back(rr);
    }
    b.group_keys.push_back(b.user_group_rows[it->second]);
    b.recent_keys.push_back(b.recent_ranges[it->second]);
    if (tm_ != nullptr) {
      const auto key = std::make_pair(inst.user_id, KeyOf(inst.candidate, config_.key_field));
      auto [sit, sfresh] = seq_slot.try_emplace(key, -1);
      if (sfresh) {
        SubsequenceResult sub = store.CandidateSubsequence(inst.user_id, inst.candidate, config_.T);
        if (!sub.events.empty()) {
          const int begin = seq_rows;
          for (const BehaviorEvent& e : sub.events) {
            AppendRow(b.subseq_idx, emb.BehaviorIndices(e, ref));
            ++seq_rows;
          }
          sit->second = static_cast<int>(b.subsequences.size());
          b.subsequences.push_back(RowRange{begin, seq_rows});
        }
      }
      b.query_subsequence.push_back(sit->second);
    }
  }
  if (gm_ != nullptr) b.groups = MakeGroupBatch(emb, groups, ref);
  return b;
}

DginModel::ForwardResult DginModel::Forward(Tape& t, const PreparedBatch& b, const GroupCache* cache) const {
  if (b.n == 0) throw PreconditionError("Forward: empty batch");
  const Embeddings& emb = *emb_;
  ForwardResult r;
  const std::vector<Field> user_fields = ToVector(Schema::UserFields());
  const std::vector<Field> ctx_fields = ToVector(Schema::ContextFields());
  const std::vector<Field> cand_fields = ToVector(Schema::CandidateFields());
  const std::vector<Field> beh_fields = ToVector(Schema::BehaviorFields());
  Var cand = emb.EmbedRows(t, cand_fields, b.candidate_idx);
  std::vector<Var> parts = {emb.EmbedRows(t, user_fields, b.user_idx), emb.EmbedRows(t, ctx_fields, b.context_idx),
                            cand};
  if (gm_ != nullptr) {
    const int width = gm_->config().group_width();
    if (cache != nullptr) {
      const int total = b.users.empty() ? 0 : b.user_group_rows.back().end;
      ValueGrid rows(total, width);
      for (std::size_t u = 0; u < b.users.size(); ++u) {
        const RowRange rr = b.user_group_rows[u];
        if (rr.end == rr.begin) continue;
        const ValueGrid* cached = cache->Get(b.users[u]);
        if (cached == nullptr || cached->rows() != rr.end - rr.begin || cached->cols() != width) {
          throw DataError("group cache has no matching rows for user " + std::to_string(b.users[u]));
        }
        std::copy(cached->values().begin(), cached->values().end(), rows.row(rr.begin));
      }
      r.e_g = t.Constant(std::move(rows));
    } else if (b.groups.group_count() > 0) {
      r.e_g = gm_->GroupRows(t, emb, b.groups);
    } else {
      r.e_g = t.Constant(ValueGrid(0, width));
    }
    r.interest_gm = gm_->Mhta(t, cand, r.e_g, b.group_keys);
    parts.push_back(r.interest_gm);
  }
  if (tm_ != nullptr) {
    Var e_t = b.subsequences.empty() ? t.Constant(ValueGrid(0, 7 * config_.d))
                                     : emb.EmbedRows(t, beh_fields, b.subseq_idx);
    r.interest_tm = tm_->Forward(t, e_t, b.subsequences, cand, b.query_subsequence).interest;
    parts.push_back(r.interest_tm);
  }
  if (base_null_ != nullptr) {
    std::vector<AttentionSegment> segs;
    std::vector<int> pick(b.n);
    bool any_null = false;
    for (std::size_t i = 0; i < b.n; ++i) {
      const RowRange rr = b.recent_keys[i];
      if (rr.end > rr.begin) {
        segs.push_back(AttentionSegment{static_cast<int>(i), static_cast<int>(i) + 1, rr.begin, rr.end});
        pick[i] = static_cast<int>(i);
      } else {
        pick[i] = static_cast<int>(b.n);
        any_null = true;
      }
    }
    Var base = segs.empty()
                   ? t.Constant(ValueGrid(static_cast<int>(b.n), 7 * config_.d))
                   : MultiHeadAttention(t, base_attn_, cand, emb.EmbedRows(t, beh_fields, b.recent_idx), segs);
    if (any_null) {
      const Var stacked[2] = {base, t.Leaf(*base_null_)};
      base = ad::SelectRows(t, ad::ConcatRows(t, stacked), pick);
    }
    r.interest_base = base;
    parts.push_back(base);
  }
  r.mlp_input = ad::ConcatCols(t, parts);
  Var h = r.mlp_input;
  for (std::size_t i = 0; i < mlp_w_.size(); ++i) {
    h = ad::Linear(t, h, t.Leaf(*mlp_w_[i]), t.Leaf(*mlp_b_[i]));
    if (i + 1 < mlp_w_.size()) h = ad::Relu(t, h);
  }
  r.logits = h;
  r.probs = ad::Sigmoid(t, h);
  return r;
}

Var DginModel::Loss(Tape& t, const PreparedBatch& batch) const {
  ForwardResult r = Forward(t, batch);
  return ad::BinaryCrossEntropy(t, r.probs, batch.labels);
}

ValueGrid DginModel::ComputeGroupRows(const BehaviorStore& store, std::int64_t user_id) const {
  if (gm_ == nullptr) throw UsageError("variant has no group module");
  const UserRecord* rec = store.User(user_id);
  if (rec == nullptr) return ValueGrid(0, gm_->config().group_width());
  std::vector<const InterestGroup*> groups = rec->Served();
  if (groups.empty()) return ValueGrid(0, gm_->config().group_width());
  Tape t;
  Var rows = gm_->GroupRows(t, *emb_, MakeGroupBatch(*emb_, groups, store.reference_timestamp()));
  return t.Value(rows);
}

std::vector<Prediction> DginModel::Predict(const BehaviorStore& store, std::span<const Instance> instances,
                                           int chunk) const {
  std::vector<Prediction> out;
  out.reserve(instances.size());
  for (std::size_t begin = 0; begin < instances.size(); begin += static_cast<std::size_t>(chunk)) {
    const std::size_t n = std::min(instances.size() - begin, static_cast<std::size_t>(chunk));
    PreparedBatch b = Prepare(store, instances.subspan(begin, n));
    Tape t;
    ForwardResult r = Forward(t, b);
    const ValueGrid& p = t.Value(r.probs);
    const ValueGrid& z = t.Value(r.logits);
    for (std::size_t i = 0; i < n; ++i) out.push_back(Prediction{p(static_cast<int>(i), 0), z(static_cast<int>(i), 0)});
  }
  return out;
}

double BatchLoss(std::span<const double> predictions, std::span<const double> labels) {
  if (predictions.empty()) throw PreconditionError("BatchLoss: empty batch");
  if (predictions.size() != labels.size()) throw PreconditionError("BatchLoss: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = std::clamp(predictions[i], kProbClamp, 1.0 - kProbClamp);
    sum += labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return -sum / static_cast<double>(predictions.size());
}

double ComputeAuc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw PreconditionError("ComputeAuc: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Tied block occupies ranks i+1..j; each gets the average rank.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0.5) {
        pos += 1.0;
        rank_sum += avg_rank;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw PreconditionError("ComputeAuc: undefined AUC, labels have a single class");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

MetricReport Evaluate(const DginModel& model, const BehaviorStore& store, std::span<const Instance> instances) {
  std::vector<Prediction> preds = model.Predict(store, instances);
  std::vector<double> p(preds.size()), y(preds.size());
  MetricReport m;
  m.n = preds.size();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    p[i] = preds[i].p;
    y[i] = static_cast<double>(instances[i].label);
    if (instances[i].label == 1) ++m.positives;
  }
  m.logloss = BatchLoss(p, y);
  m.auc = ComputeAuc(p, y);
  return m;
}

std::vector<std::vector<std::size_t>> PlanBatches(std::span<const Instance> instances, int batch_size,
                                                  int user_chunk, std::mt19937_64& rng) {
  std::map<std::int64_t, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < instances.size(); ++i) by_user[instances[i].user_id].push_back(i);
  std::vector<std::vector<std::size_t>> chunks;
  for (auto& [user, idx] : by_user) {
    Shuffle(idx, rng);
    for (std::size_t s = 0; s < idx.size(); s += static_cast<std::size_t>(user_chunk)) {
      const auto e = std::min(idx.size(), s + static_cast<std::size_t>(user_chunk));
      chunks.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(s), idx.begin() + static_cast<std::ptrdiff_t>(e));
    }
  }
  Shuffle(chunks, rng);
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> cur;
  for (const auto& c : chunks) {
    cur.insert(cur.end(), c.begin(), c.end());
    if (static_cast<int>(cur.size()) >= batch_size) {
      batches.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

void CheckTimeSplit(std::span<const Instance> train, std::span<const Instance> test) {
  if (train.empty() || test.empty()) return;
  std::int64_t train_max = train[0].decision_timestamp;
  for (const Instance& i : train) train_max = std::max(train_max, i.decision_timestamp);
  std::int64_t test_min = test[0].decision_timestamp;
  for (const Instance& i : test) test_min = std::min(test_min, i.decision_timestamp);
  if (train_max >= test_min) {
    throw PreconditionError("time split violated: train decision time " + std::to_string(train_max) +
                            " is not before test decision time " + std::to_string(test_min));
  }
}

std::vector<EpochReport> Train(DginModel& model, const BehaviorStore& store, std::span<const Instance> train,
                               std::span<const Instance> test, const TrainOptions& options) {
  CheckTimeSplit(train, test);
  if (train.empty()) throw PreconditionError("Train: no training instances");
  const ModelConfig& cfg = model.config();
  std::mt19937_64 rng(cfg.seed ^ 0x5eedba7c4ULL);
  AdamOptions adam;
  adam.lr = cfg.lr;
  std::vector<Parameter*> params = model.params().All();
  std::vector<EpochReport> reports;
  std::ofstream metrics;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir / "checkpoints");
    metrics.open(*options.out_dir / "metrics.jsonl", std::ios::trunc);
    if (!metrics) throw IoError("cannot write metrics log in " + options.out_dir->string());
  }
  int step = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& batch_idx : PlanBatches(train, cfg.batch_size, cfg.user_chunk, rng)) {
      if (options.max_steps >= 0 && step >= options.max_steps) break;
      std::vector<Instance> batch;
      batch.reserve(batch_idx.size());
      for (std::size_t i : batch_idx) batch.push_back(train[i]);
      PreparedBatch prepared = model.Prepare(store, batch);
      Tape t;
      Var loss = model.Loss(t, prepared);
      const double value = t.Value(loss)(0, 0);
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " step " + std::to_string(step));
      }
      t.Backward(loss);
      AdamStep(params, adam);
      loss_sum += value * static_cast<double>(batch.size());
      seen += batch.size();
      ++step;
    }
    EpochReport rep;
    rep.epoch = epoch;
    rep.train_logloss = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
    if (!test.empty()) rep.test = Evaluate(model, store, test);
    rep.wall_seconds = Elapsed(start);
    if (options.out_dir) {
      metrics << "{\"epoch\":" << rep.epoch << ",\"train_logloss\":" << FormatDouble(rep.train_logloss)
              << ",\"test_auc\":" << FormatDouble(rep.test.auc) << ",\"test_logloss\":"
              << FormatDouble(rep.test.logloss) << ",\"wall_seconds\":" << FormatDouble(rep.wall_seconds) << "}\n";
      metrics.flush();
      SaveModel(*options.out_dir / "checkpoints" / ("epoch_" + std::to_string(epoch)), model);
    }
    if (options.on_epoch) options.on_epoch(rep);
    reports.push_back(rep);
    if (options.max_steps >= 0 && step >= options.max_steps) break;
  }
  return reports;
}

std::vector<AblationRow> Ablate(const ModelConfig& base, const VocabSizes& vocab, const AblationInputs& in, int seeds,
                                std::span<const Variant> variants, const std::function<void(const std::string&)>& log) {
  if (seeds < 1) throw ConfigError("Ablate: need at least one seed");
  if (in.store == nullptr) throw ConfigError("Ablate: missing store");
  std::vector<Variant> list = variants.empty() ? AllVariants() : std::vector<Variant>(variants.begin(), variants.end());
  std::vector<AblationRow> rows;
  for (Variant v : list) {
    AblationRow row;
    row.variant = v;
    row.label = std::string(VariantName(v));
    const BehaviorStore* store = in.store;
    if (v == Variant::kClickOnly) {
      if (in.click_store == nullptr) throw ConfigError("Ablate: click_only needs a click-only store");
      store = in.click_store;
    }
    for (int k = 0; k < seeds; ++k) {
      ModelConfig cfg = base;
      cfg.variant = v;
      cfg.seed = base.seed + static_cast<std::uint64_t>(k);
      DginModel model(cfg, vocab);
      const auto start = std::chrono::steady_clock::now();
      std::vector<EpochReport> reps = Train(model, *store, in.train, in.test);
      const MetricReport m = reps.empty() ? Evaluate(model, *store, in.test) : reps.back().test;
      row.aucs.push_back(m.auc);
      row.loglosses.push_back(m.logloss);
      if (log) {
        std::ostringstream msg;
        msg << row.label << " seed " << cfg.seed << ": auc " << m.auc << " logloss " << m.logloss << " ("
            << Elapsed(start) << " s)";
        log(msg.str());
      }
    }
    const double n = static_cast<double>(row.aucs.size());
    row.mean_auc = std::accumulate(row.aucs.begin(), row.aucs.end(), 0.0) / n;
    row.mean_logloss = std::accumulate(row.loglosses.begin(), row.loglosses.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : row.aucs) ss += (a - row.mean_auc) * (a - row.mean_auc);
    row.sd_auc = row.aucs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

const std::vector<std::string>& ModelConfigKeys() {
  static const std::vector<std::string> kKeys = {
      "d",           "heads",      "B",          "G",           "T",
      "baseline_window", "key_field", "variant",  "mlp_widths",  "lr",
      "batch_size",  "user_chunk", "epochs",     "seed",        "vocab_items",
      "vocab_categories", "vocab_locations", "vocab_segments", "vocab_age_bands", "vocab_surfaces"};
  return kKeys;
}

void ApplyModelConfig(const KeyValues& kv, ModelConfig& c, VocabSizes& v) {
  c.d = static_cast<int>(kv.GetInt("d", c.d));
  c.heads = static_cast<int>(kv.GetInt("heads", c.heads));
  c.B = static_cast<int>(kv.GetInt("B", c.B));
  c.G = static_cast<int>(kv.GetInt("G", c.G));
  c.T = static_cast<int>(kv.GetInt("T", c.T));
  c.baseline_window = static_cast<int>(kv.GetInt("baseline_window", c.baseline_window));
  c.key_field = ParseKeyField(kv.GetString("key_field", std::string(KeyFieldName(c.key_field))));
  c.variant = ParseVariant(kv.GetString("variant", std::string(VariantName(c.variant))));
  c.mlp_widths = kv.GetIntList("mlp_widths", c.mlp_widths);
  c.lr = kv.GetDouble("lr", c.lr);
  c.batch_size = static_cast<int>(kv.GetInt("batch_size", c.batch_size));
  c.user_chunk = static_cast<int>(kv.GetInt("user_chunk", c.user_chunk));
  c.epochs = static_cast<int>(kv.GetInt("epochs", c.epochs));
  c.seed = static_cast<std::uint64_t>(kv.GetInt("seed", static_cast<std::int64_t>(c.seed)));
  v.items = kv.GetInt("vocab_items", v.items);
  v.categories = kv.GetInt("vocab_categories", v.categories);
  v.locations = kv.GetInt("vocab_locations", v.locations);
  v.segments = kv.GetInt("vocab_segments", v.segments);
  v.age_bands = kv.GetInt("vocab_age_bands", v.age_bands);
  v.surfaces = kv.GetInt("vocab_surfaces", v.surfaces);
}

KeyValues ModelConfigValues(const ModelConfig& c, const VocabSizes& v) {
  KeyValues kv;
  kv.Set("d", std::to_string(c.d));
  kv.Set("heads", std::to_string(c.heads));
  kv.Set("B", std::to_string(c.B));
  kv.Set("G", std::to_string(c.G));
  kv.Set("T", std::to_string(c.T));
  kv.Set("baseline_window", std::to_string(c.baseline_window));
  kv.Set("key_field", std::string(KeyFieldName(c.key_field)));
  kv.Set("variant", std::string(VariantName(c.variant)));
  std::string widths;
  for (std::size_t i = 0; i < c.mlp_widths.size(); ++i) widths += (i ? "," : "") + std::to_string(c.mlp_widths[i]);
  kv.Set("mlp_widths", widths);
  kv.Set("lr", FormatDouble(c.lr));
  kv.Set("batch_size", std::to_string(c.batch_size));
  kv.Set("user_chunk", std::to_string(c.user_chunk));
  kv.Set("epochs", std::to_string(c.epochs));
  kv.Set("seed", std::to_string(c.seed));
  kv.Set("vocab_items", std::to_string(v.items));
  kv.Set("vocab_categories", std::to_string(v.categories));
  kv.Set("vocab_locations", std::to_string(v.locations));
  kv.Set("vocab_segments", std::to_string(v.segments));
  kv.Set("vocab_age_bands", std::to_string(v.age_bands));
  kv.Set("vocab_surfaces", std::to_string(v.surfaces));
  return kv;
}

void SaveModel(const std::filesystem::path& dir, const DginModel& model) {
  SaveCheckpoint(dir, model.params(), model.SchemaHash());
  std::ofstream cfg(dir / "model.cfg", std::ios::trunc);
  std::ofstream schema(dir / "schema.txt", std::ios::trunc);
  if (!cfg || !schema) throw IoError("cannot write model files in " + dir.string());
  cfg << ModelConfigValues(model.config(), model.vocab()).ToText();
  schema << model.embeddings().schema().ManifestText();
  if (!cfg || !schema) throw IoError("write failure in " + dir.string());
}

std::unique_ptr<DginModel> LoadModel(const std::filesystem::path& dir) {
  ModelConfig cfg;
  VocabSizes vocab;
  ApplyModelConfig(KeyValues::ReadFile(dir / "model.cfg"), cfg, vocab);
  auto model = std::make_unique<DginModel>(cfg, vocab);
  LoadCheckpoint(dir, model->params(), model->SchemaHash());
  return model;
}

}  // namespace dgin
