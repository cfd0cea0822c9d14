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

#ifndef DGIN_MODEL_GROUP_MODULE_H_
#define DGIN_MODEL_GROUP_MODULE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dgin/embedding/embedding.h"
#include "dgin/numerics/tape.h"
#include "dgin/store/behavior_store.h"

namespace dgin {

// Projection set of one multi-head attention: q = x_q Wq, k = x_kv Wk,
// v = x_kv Wv, out = concat(heads) Wo. No biases.
struct AttentionParams {
  Parameter* wq = nullptr;
  Parameter* wk = nullptr;
  Parameter* wv = nullptr;
  Parameter* wo = nullptr;
  int heads = 1;

  // Throws ConfigError unless heads divides width.
  static AttentionParams Create(ParameterSet& params, const std::string& prefix, int query_in, int kv_in, int width,
                                int heads, std::mt19937_64& rng);
  int width() const { return wo->cols(); }
};

Var MultiHeadAttention(Tape& t, const AttentionParams& p, Var query_in, Var kv_in,
                       std::span<const AttentionSegment> segments, std::span<const std::uint8_t> key_mask = {});

struct GroupModuleConfig {
  int d = 8;
  int heads = 2;
  bool category_mode = false;  // members carry item_id, stats carry item counts
  bool use_stats = true;
  bool use_agg = true;

  int member_width() const { return (category_mode ? 4 : 3) * d; }
  int identity_width() const { return 3 * d; }
  int stat_width() const { return (category_mode ? 12 : 10) * d; }
  int candidate_width() const { return 4 * d; }
  // D_g = identity [+ stats] [+ aggregated attribute]
  int group_width() const {
    return identity_width() + (use_stats ? stat_width() : 0) + (use_agg ? member_width() : 0);
  }
};

// Embedding indices for a list of groups, packed without padding.
struct GroupBatch {
  IndexColumns member_idx;               // one row per member of every group
  std::vector<RowRange> member_ranges;   // member rows of group g
  IndexColumns identity_idx;             // one row per group
  IndexColumns stat_idx;                 // one row per group
  int group_count() const { return static_cast<int>(member_ranges.size()); }
};

GroupBatch MakeGroupBatch(const Embeddings& emb, std::span<const InterestGroup* const> groups,
                          std::int64_t reference_timestamp);

// The Group Module: intra-group MHSA, mean-pooled aggregated attribute, and
// candidate-to-group target attention.
class GroupModule {
 public:
  GroupModule(const GroupModuleConfig& config, ParameterSet& params, std::mt19937_64& rng);

  const GroupModuleConfig& config() const { return config_; }
  const AttentionParams& self_attention() const { return self_; }
  const AttentionParams& target_attention() const { return target_; }
  Parameter& null_interest() const { return *null_; }

  // MHSA over one group's member embeddings e_b (B x member_width); member
  // rows with mask 0 are excluded as keys.
  Var Mhsa(Tape& t, Var e_b, std::span<const std::uint8_t> member_mask) const;
  // Mean over unmasked rows.
  static Var Aggregate(Tape& t, Var mhsa_out, std::span<const std::uint8_t> member_mask);

  // Group representation rows e_g (one per group in the batch).
  Var GroupRows(Tape& t, const Embeddings& emb, const GroupBatch& batch) const;

  // Target attention: query row i attends over e_g rows key_ranges[i] plus
  // the learned null group row; an empty range yields the null vector
  // itself. Output: N x D_g.
  Var Mhta(Tape& t, Var candidate, Var e_g, std::span<const RowRange> key_ranges) const;
  // Same for one candidate over a padded matrix with a group mask.
  Var MhtaMasked(Tape& t, Var candidate, Var e_g, std::span<const std::uint8_t> group_mask) const;

 private:
  GroupModuleConfig config_;
  AttentionParams self_;
  AttentionParams target_;
  Parameter* null_ = nullptr;
};

// Padded group matrix of one user: rows beyond the real groups are zero and
// masked out. Throws PreconditionError if the user has more than G groups.
struct GroupMatrix {
  Var e_g;
  std::vector<std::uint8_t> mask;
};
GroupMatrix BuildGroupMatrix(Tape& t, const GroupModule& gm, const Embeddings& emb, const GroupedSequence& grouped,
                             int G, std::int64_t reference_timestamp);

// Precomputed e_g rows keyed by user: a directory with manifest.txt
// ("dgin-eg-cache 1", "width <D_g>", "users <n>", then "user_id rows offset")
// and rows.bin (little-endian float64).
class GroupCache {
 public:
  void Put(std::int64_t user_id, ValueGrid rows);
  const ValueGrid* Get(std::int64_t user_id) const;
  std::size_t size() const { return rows_.size(); }
  void Save(const std::filesystem::path& dir) const;
  static GroupCache Load(const std::filesystem::path& dir);

 private:
  std::map<std::int64_t, ValueGrid> rows_;
};

}  // namespace dgin

#endif  // DGIN_MODEL_GROUP_MODULE_H_
