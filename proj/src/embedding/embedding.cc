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

#include "dgin/embedding/embedding.h"

#include <cmath>
#include <sstream>

#include "dgin/error.h"
#include "dgin/numerics/checkpoint.h"

namespace dgin {
namespace {

constexpr int kCountBuckets = 20;
constexpr int kPriceBuckets = 24;
constexpr int kDwellBuckets = 16;
constexpr int kAgeBuckets = 32;

std::string_view RuleName(FieldRule r) {
  switch (r) {
    case FieldRule::kCategorical:
      return "categorical";
    case FieldRule::kLogBucket:
      return "log_bucket";
    case FieldRule::kAgeWeekend:
      return "age_weekend";
  }
  return "?";
}

int FieldId(Field f) { return static_cast<int>(f); }

int CategoricalK(std::int64_t vocab) {
  if (vocab < 1 || vocab > (1 << 24)) throw ConfigError("vocabulary size out of range: " + std::to_string(vocab));
  return static_cast<int>(vocab) + 1;
}

}  // namespace

int Bucketize(double v, int base, int K) {
  if (std::isnan(v)) throw NumericError("Bucketize: NaN value");
  if (K < 4 || base < 2) throw ConfigError("Bucketize: need K >= 4 and base >= 2");
  if (v < 0.0) return 1;
  if (v == 0.0) return 2;
  // floor(log_base v) by exact repeated multiplication.
  int k = 0;
  double p = base;
  while (p <= v && 3 + k < K - 1) {
    ++k;
    p *= base;
  }
  return 3 + k;
}

Schema Schema::Standard(const VocabSizes& v, KeyField key_field) {
  Schema s;
  s.key_field_ = key_field;
  auto add = [&s](Field f, std::string name, int K, FieldRule rule, int base = 2) {
    s.fields_.push_back(FieldSchema{f, std::move(name), K, rule, base});
  };
  add(Field::kItemId, "item_id", CategoricalK(v.items), FieldRule::kCategorical);
  add(Field::kCategoryId, "category_id", CategoricalK(v.categories), FieldRule::kCategorical);
  add(Field::kPrice, "price", kPriceBuckets, FieldRule::kLogBucket);
  add(Field::kTimestamp, "timestamp", 2 * kAgeBuckets, FieldRule::kAgeWeekend);
  add(Field::kLocationCell, "location_cell", CategoricalK(v.locations), FieldRule::kCategorical);
  add(Field::kBehaviorType, "behavior_type", kNumBehaviorTypes + 1, FieldRule::kCategorical);
  add(Field::kDwell, "dwell", kDwellBuckets, FieldRule::kLogBucket);
  const char* count_names[kNumBehaviorTypes] = {"count_click",           "count_add_to_cart",
                                                "count_add_to_favorite", "count_browse_dishes",
                                                "count_view_comments",   "count_purchase"};
  for (int t = 0; t < kNumBehaviorTypes; ++t)
    add(static_cast<Field>(FieldId(Field::kStatClick) + t), count_names[t], kCountBuckets, FieldRule::kLogBucket);
  add(Field::kStatTotal, "count_total", kCountBuckets, FieldRule::kLogBucket);
  add(Field::kStatDistinctTypes, "distinct_types", kNumBehaviorTypes + 2, FieldRule::kCategorical);
  add(Field::kStatAvgDwell, "avg_dwell", kDwellBuckets, FieldRule::kLogBucket);
  add(Field::kStatAvgPurchase, "avg_purchase", kPriceBuckets, FieldRule::kLogBucket);
  if (key_field == KeyField::kCategoryId) {
    add(Field::kStatDistinctItems, "distinct_items", kCountBuckets, FieldRule::kLogBucket);
    add(Field::kStatTotalItems, "total_items", kCountBuckets, FieldRule::kLogBucket);
  }
  add(Field::kSegment, "segment", CategoricalK(v.segments), FieldRule::kCategorical);
  add(Field::kAgeBand, "age_band", CategoricalK(v.age_bands), FieldRule::kCategorical);
  add(Field::kHourOfWeek, "hour_of_week", 7 * 24 + 1, FieldRule::kCategorical);
  add(Field::kSurface, "surface", CategoricalK(v.surfaces), FieldRule::kCategorical);
  s.position_.fill(-1);
  for (std::size_t i = 0; i < s.fields_.size(); ++i) s.position_[FieldId(s.fields_[i].field)] = static_cast<int>(i);
  return s;
}

bool Schema::Has(Field f) const { return position_[FieldId(f)] >= 0; }

const FieldSchema& Schema::Get(Field f) const {
  if (!Has(f)) throw ConfigError("schema has no field #" + std::to_string(FieldId(f)));
  return fields_[position_[FieldId(f)]];
}

std::string Schema::ManifestText() const {
  std::ostringstream out;
  out << "dgin-schema 1\nkey_field " << KeyFieldName(key_field_) << "\n";
  for (const FieldSchema& f : fields_) out << f.name << ' ' << f.cardinality << ' ' << RuleName(f.rule) << ' ' << f.base << '\n';
  return out.str();
}

std::uint64_t Schema::Hash() const { return Fnv1a64(ManifestText()); }

const std::array<Field, 7>& Schema::BehaviorFields() {
  static const std::array<Field, 7> kFields = {Field::kItemId,       Field::kCategoryId,   Field::kPrice,
                                               Field::kTimestamp,    Field::kLocationCell, Field::kBehaviorType,
                                               Field::kDwell};
  return kFields;
}

std::vector<Field> Schema::MemberFields() const {
  std::vector<Field> f = {Field::kTimestamp, Field::kLocationCell, Field::kBehaviorType};
  if (category_mode()) f.push_back(Field::kItemId);
  return f;
}

const std::array<Field, 3>& Schema::IdentityFields() {
  static const std::array<Field, 3> kFields = {Field::kItemId, Field::kCategoryId, Field::kPrice};
  return kFields;
}

std::vector<Field> Schema::StatFields() const {
  std::vector<Field> f;
  for (int t = 0; t < kNumBehaviorTypes; ++t) f.push_back(static_cast<Field>(FieldId(Field::kStatClick) + t));
  f.insert(f.end(), {Field::kStatTotal, Field::kStatDistinctTypes, Field::kStatAvgDwell, Field::kStatAvgPurchase});
  if (category_mode()) f.insert(f.end(), {Field::kStatDistinctItems, Field::kStatTotalItems});
  return f;
}

const std::array<Field, 4>& Schema::CandidateFields() {
  static const std::array<Field, 4> kFields = {Field::kItemId, Field::kCategoryId, Field::kPrice,
                                               Field::kLocationCell};
  return kFields;
}

const std::array<Field, 2>& Schema::UserFields() {
  static const std::array<Field, 2> kFields = {Field::kSegment, Field::kAgeBand};
  return kFields;
}

const std::array<Field, 2>& Schema::ContextFields() {
  static const std::array<Field, 2> kFields = {Field::kHourOfWeek, Field::kSurface};
  return kFields;
}

Embeddings::Embeddings(Schema schema, int d, ParameterSet& params, std::mt19937_64& rng)
    : schema_(std::move(schema)), d_(d), tables_(kNumFields, nullptr) {
  if (d < 1) throw ConfigError("embedding width d must be positive");
  for (const FieldSchema& f : schema_.fields()) {
    if (f.cardinality < 2) throw ConfigError("field " + f.name + " needs cardinality >= 2");
    tables_[FieldId(f.field)] = &params.Create("emb/" + f.name, f.cardinality, d, Init::kEmbedding, rng);
  }
}

Parameter& Embeddings::Table(Field f) const {
  Parameter* p = tables_[FieldId(f)];
  if (p == nullptr) throw ConfigError("no embedding table for field #" + std::to_string(FieldId(f)));
  return *p;
}

int Embeddings::Categorical(Field f, std::int64_t id) const {
  const int K = schema_.Get(f).cardinality;
  if (id < 0 || id + 1 >= K) {
    oov_count_.fetch_add(1, std::memory_order_relaxed);
    return 0;
  }
  return static_cast<int>(id) + 1;
}

int Embeddings::Bucket(Field f, double value) const {
  const FieldSchema& s = schema_.Get(f);
  return Bucketize(value, s.base, s.cardinality);
}

int Embeddings::TimestampIndex(std::int64_t timestamp, std::int64_t reference) const {
  const FieldSchema& s = schema_.Get(Field::kTimestamp);
  const std::int64_t age = std::max<std::int64_t>(reference - timestamp, 0);
  return 2 * Bucketize(static_cast<double>(age), s.base, s.cardinality / 2) + (IsWeekend(timestamp) ? 1 : 0);
}

std::array<int, 7> Embeddings::BehaviorIndices(const BehaviorEvent& e, std::int64_t reference) const {
  return {Categorical(Field::kItemId, e.item_id),
          Categorical(Field::kCategoryId, e.category_id),
          Bucket(Field::kPrice, static_cast<double>(e.price_cents)),
          TimestampIndex(e.timestamp, reference),
          Categorical(Field::kLocationCell, e.location_cell),
          Categorical(Field::kBehaviorType, TypeIndex(e.behavior_type)),
          Bucket(Field::kDwell, static_cast<double>(e.dwell_seconds))};
}

std::vector<int> Embeddings::MemberIndices(const MemberRecord& m, std::int64_t reference) const {
  std::vector<int> out = {TimestampIndex(m.timestamp, reference), Categorical(Field::kLocationCell, m.location_cell),
                          Categorical(Field::kBehaviorType, TypeIndex(m.behavior_type))};
  if (schema_.category_mode()) out.push_back(Categorical(Field::kItemId, m.item_id));
  return out;
}

std::array<int, 3> Embeddings::IdentityIndices(const InterestGroup& g) const {
  return {schema_.category_mode() ? 0 : Categorical(Field::kItemId, g.identity.item_id),
          Categorical(Field::kCategoryId, g.identity.category_id),
          Bucket(Field::kPrice, static_cast<double>(g.identity.price_cents))};
}

std::vector<int> Embeddings::StatIndices(const GroupStats& s) const {
  std::vector<int> out;
  out.reserve(12);
  for (int t = 0; t < kNumBehaviorTypes; ++t)
    out.push_back(Bucket(static_cast<Field>(FieldId(Field::kStatClick) + t), static_cast<double>(s.per_type_counts[t])));
  out.push_back(Bucket(Field::kStatTotal, static_cast<double>(s.total_behaviors)));
  out.push_back(Categorical(Field::kStatDistinctTypes, s.distinct_types));
  out.push_back(Bucket(Field::kStatAvgDwell, s.avg_dwell_seconds));
  out.push_back(Bucket(Field::kStatAvgPurchase, s.avg_purchase_cents));
  if (schema_.category_mode()) {
    out.push_back(Bucket(Field::kStatDistinctItems, static_cast<double>(s.distinct_item_count)));
    out.push_back(Bucket(Field::kStatTotalItems, static_cast<double>(s.total_item_count)));
  }
  return out;
}

std::array<int, 4> Embeddings::CandidateIndices(const CandidateItem& c) const {
  return {Categorical(Field::kItemId, c.item_id), Categorical(Field::kCategoryId, c.category_id),
          Bucket(Field::kPrice, static_cast<double>(c.price_cents)),
          Categorical(Field::kLocationCell, c.location_cell)};
}

std::array<int, 2> Embeddings::UserIndices(const UserFeatures& u) const {
  return {Categorical(Field::kSegment, u.segment), Categorical(Field::kAgeBand, u.age_band)};
}

std::array<int, 2> Embeddings::ContextIndices(const ContextFeatures& c) const {
  return {Categorical(Field::kHourOfWeek, c.hour_of_week), Categorical(Field::kSurface, c.surface)};
}

Var Embeddings::EmbedField(Tape& t, Field f, int index) const {
  int idx[1] = {index};
  if (index < 0 || index >= Table(f).rows()) {
    oov_count_.fetch_add(1, std::memory_order_relaxed);
    idx[0] = 0;
  }
  return ad::Gather(t, Table(f), idx);
}

Var Embeddings::EmbedRows(Tape& t, std::span<const Field> fields, const IndexColumns& idx) const {
  if (idx.size() != fields.size()) {
    throw DimensionError("EmbedRows: " + std::to_string(fields.size()) + " fields but " + std::to_string(idx.size()) +
                         " index columns");
  }
  std::vector<Var> parts;
  parts.reserve(fields.size());
  for (std::size_t f = 0; f < fields.size(); ++f) parts.push_back(ad::Gather(t, Table(fields[f]), idx[f]));
  if (parts.size() == 1) return parts[0];
  return ad::ConcatCols(t, parts);
}

}  // namespace dgin
