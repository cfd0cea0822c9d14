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

#ifndef DGIN_MODEL_MODEL_H_
#define DGIN_MODEL_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgin/data/kv_config.h"
#include "dgin/embedding/embedding.h"
#include "dgin/model/group_module.h"
#include "dgin/model/target_module.h"
#include "dgin/numerics/adam.h"
#include "dgin/store/behavior_store.h"

namespace dgin {

enum class Variant {
  kSimple,
  kStats,       // simple + statistical attributes
  kAgg,         // + aggregated attribute
  kFull,        // + target module
  kClickOnly,   // full architecture over a click-only store
  kTruncatedBaseline,
};

// Ladder order used by ablation reports.
const std::vector<Variant>& AllVariants();
std::string_view VariantName(Variant v);
Variant ParseVariant(std::string_view name);

struct ModelConfig {
  int d = 16;
  int heads = 2;
  int B = 8;
  int G = 64;
  int T = 50;
  int baseline_window = 50;
  KeyField key_field = KeyField::kItemId;
  Variant variant = Variant::kFull;
  std::vector<int> mlp_widths = {256, 128, 64, 1};
  double lr = 1e-3;
  int batch_size = 256;
  int user_chunk = 8;  // instances of one user kept together in a batch
  int epochs = 2;
  std::uint64_t seed = 1;

  // Throws ConfigError on inconsistent values.
  void Validate() const;
  // Stable text of every architecture-relevant field.
  std::string Signature() const;
};

struct Prediction {
  double p = 0.5;
  double logit = 0.0;
};

struct MetricReport {
  double auc = 0.5;
  double logloss = 0.0;
  std::size_t n = 0;
  std::size_t positives = 0;
};

// Parameter-independent inputs of one batch: embedding indices for the
// instances, the groups of every distinct user, candidate subsequences and
// baseline windows, all packed without padding.
struct PreparedBatch {
  std::size_t n = 0;
  std::vector<double> labels;
  IndexColumns user_idx, context_idx, candidate_idx;

  // Group module.
  std::vector<std::int64_t> users;          // distinct users in batch order
  std::vector<RowRange> user_group_rows;    // rows of e_g per distinct user
  GroupBatch groups;
  std::vector<RowRange> group_keys;         // per instance

  // Target module.
  IndexColumns subseq_idx;                  // behavior rows
  std::vector<RowRange> subsequences;       // distinct (user, key) sequences
  std::vector<int> query_subsequence;       // per instance, -1 when empty

  // Truncated baseline.
  IndexColumns recent_idx;
  std::vector<RowRange> recent_ranges;      // per distinct user
  std::vector<RowRange> recent_keys;        // per instance

  std::size_t cold_start = 0;
};

// Column layout of the MLP input.
struct Slice {
  std::string name;
  int begin = 0;
  int end = 0;
};

class DginModel {
 public:
  struct ForwardResult {
    Var logits;      // N x 1
    Var probs;       // N x 1
    Var mlp_input;   // N x width
    Var interest_gm;  // invalid unless the variant uses the group module
    Var interest_tm;  // invalid unless the variant uses the target module
    Var interest_base;
    Var e_g;          // group rows used by the group module
  };

  DginModel(const ModelConfig& config, const VocabSizes& vocab);
  const VocabSizes& vocab() const { return vocab_; }
  DginModel(const DginModel&) = delete;
  DginModel& operator=(const DginModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const Embeddings& embeddings() const { return *emb_; }
  const GroupModule* group_module() const { return gm_.get(); }
  const TargetModule* target_module() const { return tm_.get(); }
  const std::vector<Slice>& mlp_layout() const { return layout_; }
  // Schema manifest hash combined with the architecture signature.
  std::uint64_t SchemaHash() const;

  bool uses_group_module() const { return gm_ != nullptr; }
  bool uses_target_module() const { return tm_ != nullptr; }

  PreparedBatch Prepare(const BehaviorStore& store, std::span<const Instance> instances) const;
  // Forward pass. When cache is given, e_g rows of every user are taken from
  // it instead of being recomputed.
  ForwardResult Forward(Tape& t, const PreparedBatch& batch, const GroupCache* cache = nullptr) const;
  // Mean log loss of the batch (1 x 1).
  Var Loss(Tape& t, const PreparedBatch& batch) const;

  // e_g rows of one user's served groups (empty grid for none).
  ValueGrid ComputeGroupRows(const BehaviorStore& store, std::int64_t user_id) const;

  std::vector<Prediction> Predict(const BehaviorStore& store, std::span<const Instance> instances,
                                  int chunk = 512) const;

 private:
  ModelConfig config_;
  VocabSizes vocab_;
  ParameterSet params_;
  std::unique_ptr<Embeddings> emb_;
  std::unique_ptr<GroupModule> gm_;
  std::unique_ptr<TargetModule> tm_;
  AttentionParams base_attn_;
  Parameter* base_null_ = nullptr;
  std::vector<Parameter*> mlp_w_, mlp_b_;
  std::vector<Slice> layout_;
};

// Mean binary cross-entropy with p clamped to [1e-12, 1 - 1e-12]. Throws PreconditionError on an
// empty batch or a size mismatch.
double BatchLoss(std::span<const double> predictions, std::span<const double> labels);
// Rank-sum AUC, ties counted one half. Throws PreconditionError unless both
// classes are present.
double ComputeAuc(std::span<const double> scores, std::span<const double> labels);
MetricReport Evaluate(const DginModel& model, const BehaviorStore& store, std::span<const Instance> instances);

// Orders instances into batches: each user's instances are shuffled and cut
// into chunks of user_chunk, chunks are shuffled and concatenated into
// batches of about batch_size.
std::vector<std::vector<std::size_t>> PlanBatches(std::span<const Instance> instances, int batch_size,
                                                  int user_chunk, std::mt19937_64& rng);

// Throws PreconditionError unless every train decision time precedes every
// test decision time.
void CheckTimeSplit(std::span<const Instance> train, std::span<const Instance> test);

struct EpochReport {
  int epoch = 0;
  double train_logloss = 0.0;
  MetricReport test;
  double wall_seconds = 0.0;
};

struct TrainOptions {
  std::optional<std::filesystem::path> out_dir;  // metrics.jsonl and checkpoints/
  int max_steps = -1;                            // stop early after this many steps
  bool verbose = false;
  std::function<void(const EpochReport&)> on_epoch;
};

// Trains in place. Aborts with NumericError on a non-finite loss; earlier
// epoch checkpoints stay on disk.
std::vector<EpochReport> Train(DginModel& model, const BehaviorStore& store, std::span<const Instance> train,
                               std::span<const Instance> test, const TrainOptions& options = {});

struct AblationRow {
  Variant variant = Variant::kFull;
  std::string label;
  std::vector<double> aucs;
  std::vector<double> loglosses;
  double mean_auc = 0.0;
  double sd_auc = 0.0;
  double mean_logloss = 0.0;
};

struct AblationInputs {
  const BehaviorStore* store = nullptr;        // full multi-behavior store
  const BehaviorStore* click_store = nullptr;  // store built from clicks only
  std::span<const Instance> train;
  std::span<const Instance> test;
};

// Trains every variant once per seed (seed = base.seed + k) and reports
// per-variant mean and standard deviation of test AUC in ladder order.
std::vector<AblationRow> Ablate(const ModelConfig& base, const VocabSizes& vocab, const AblationInputs& inputs,
                                int seeds, std::span<const Variant> variants = {},
                                const std::function<void(const std::string&)>& log = {});

// Config keys: d, heads, B, G, T, baseline_window, key_field, variant,
// mlp_widths, lr, batch_size, user_chunk, epochs, seed, and vocab_items,
// vocab_categories, vocab_locations, vocab_segments, vocab_age_bands,
// vocab_surfaces.
const std::vector<std::string>& ModelConfigKeys();
void ApplyModelConfig(const KeyValues& kv, ModelConfig& config, VocabSizes& vocab);
KeyValues ModelConfigValues(const ModelConfig& config, const VocabSizes& vocab);

// A model directory holds model.cfg, schema.txt and the checkpoint files.
void SaveModel(const std::filesystem::path& dir, const DginModel& model);
std::unique_ptr<DginModel> LoadModel(const std::filesystem::path& dir);

}  // namespace dgin

#endif  // DGIN_MODEL_MODEL_H_
