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

#ifndef DGIN_EMBEDDING_EMBEDDING_H_
#define DGIN_EMBEDDING_EMBEDDING_H_

#include <array>
#include <atomic>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dgin/data/behavior.h"
#include "dgin/numerics/parameter.h"
#include "dgin/numerics/tape.h"
#include "dgin/store/behavior_store.h"

namespace dgin {

// Every embedded field. Behavior attributes come first in the order they are
// concatenated for a full behavior row.
enum class Field : int {
  kItemId = 0,
  kCategoryId,
  kPrice,
  kTimestamp,
  kLocationCell,
  kBehaviorType,
  kDwell,
  kStatClick,
  kStatAddToCart,
  kStatAddToFavorite,
  kStatBrowseDishes,
  kStatViewComments,
  kStatPurchase,
  kStatTotal,
  kStatDistinctTypes,
  kStatAvgDwell,
  kStatAvgPurchase,
  kStatDistinctItems,
  kStatTotalItems,
  kSegment,
  kAgeBand,
  kHourOfWeek,
  kSurface,
};
inline constexpr int kNumFields = 23;

enum class FieldRule {
  kCategorical,  // id + 1, ids at or beyond K - 1 fold to 0
  kLogBucket,    // Bucketize(value, base, K)
  kAgeWeekend,   // 2 * Bucketize(age, base, K / 2) + weekend flag
};

struct FieldSchema {
  Field field = Field::kItemId;
  std::string name;
  int cardinality = 2;  // K, index 0 reserved for out-of-vocabulary
  FieldRule rule = FieldRule::kCategorical;
  int base = 2;  // log base for bucketed fields
};

// -1 (no purchases) -> 1, 0 -> 2, v > 0 -> clamp(3 + floor(log_base v), 3,
// K - 1). Other negatives also map to 1. Throws NumericError on NaN and
// ConfigError when K < 4 or base < 2.
int Bucketize(double v, int base, int K);

// Cardinalities of the raw categorical domains.
struct VocabSizes {
  std::int64_t items = 1000;
  std::int64_t categories = 50;
  std::int64_t locations = 64;
  std::int64_t segments = 8;
  std::int64_t age_bands = 8;
  std::int64_t surfaces = 4;
};

class Schema {
 public:
  // Standard field set; the two item-count stats exist only when grouping by
  // category.
  static Schema Standard(const VocabSizes& vocab, KeyField key_field);

  const std::vector<FieldSchema>& fields() const { return fields_; }
  bool Has(Field f) const;
  const FieldSchema& Get(Field f) const;
  KeyField key_field() const { return key_field_; }
  bool category_mode() const { return key_field_ == KeyField::kCategoryId; }

  // One line per field: name, cardinality, rule, base (in schema order).
  std::string ManifestText() const;
  std::uint64_t Hash() const;

  // Field lists for each embedded row type.
  static const std::array<Field, 7>& BehaviorFields();
  std::vector<Field> MemberFields() const;    // timestamp, location, type (+ item_id by category)
  static const std::array<Field, 3>& IdentityFields();
  std::vector<Field> StatFields() const;      // 10 (+2 by category)
  static const std::array<Field, 4>& CandidateFields();
  static const std::array<Field, 2>& UserFields();
  static const std::array<Field, 2>& ContextFields();

 private:
  KeyField key_field_ = KeyField::kItemId;
  std::vector<FieldSchema> fields_;
  std::array<int, kNumFields> position_{};
};

// Per-row table indices for a set of fields: idx[f][row].
using IndexColumns = std::vector<std::vector<int>>;

// Embedding tables for a schema, one K x d parameter per field named
// "emb/<field>". All tables share d.
class Embeddings {
 public:
  Embeddings(Schema schema, int d, ParameterSet& params, std::mt19937_64& rng);

  const Schema& schema() const { return schema_; }
  int d() const { return d_; }
  Parameter& Table(Field f) const;

  // Index of a raw categorical id; counts folds to 0.
  int Categorical(Field f, std::int64_t id) const;
  int Bucket(Field f, double value) const;
  int TimestampIndex(std::int64_t timestamp, std::int64_t reference) const;
  std::int64_t oov_count() const { return oov_count_.load(); }
  void ResetOovCount() { oov_count_ = 0; }

  // Index tuples, ordered like the matching Schema field list.
  std::array<int, 7> BehaviorIndices(const BehaviorEvent& e, std::int64_t reference) const;
  std::vector<int> MemberIndices(const MemberRecord& m, std::int64_t reference) const;
  std::array<int, 3> IdentityIndices(const InterestGroup& g) const;
  std::vector<int> StatIndices(const GroupStats& s) const;
  std::array<int, 4> CandidateIndices(const CandidateItem& c) const;
  std::array<int, 2> UserIndices(const UserFeatures& u) const;
  std::array<int, 2> ContextIndices(const ContextFeatures& c) const;

  // Row of one table (1 x d); the gradient lands in that row only.
  Var EmbedField(Tape& t, Field f, int index) const;
  // Concatenated embeddings of rows: out row r = [E_f0[idx[0][r]], ...].
  Var EmbedRows(Tape& t, std::span<const Field> fields, const IndexColumns& idx) const;

 private:
  Schema schema_;
  int d_;
  std::vector<Parameter*> tables_;  // by Field value, null when absent
  mutable std::atomic<std::int64_t> oov_count_{0};
};

// Appends one index tuple as a new row of idx (idx sized to the tuple).
template <typename Tuple>
void AppendRow(IndexColumns& idx, const Tuple& tuple) {
  if (idx.size() < tuple.size()) idx.resize(tuple.size());
  for (std::size_t f = 0; f < tuple.size(); ++f) idx[f].push_back(tuple[f]);
}

}  // namespace dgin

#endif  // DGIN_EMBEDDING_EMBEDDING_H_
