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

#include <cmath>
#include <random>

#include "dgin/embedding/embedding.h"
#include "dgin/error.h"

namespace dgin {
namespace {

// Bucket from the definition using floating log, for values away from powers.
int OracleBucket(double v, int base, int K) {
  if (v < 0) return 1;
  if (v == 0) return 2;
  const int k = static_cast<int>(std::floor(std::log(v) / std::log(base)));
  return std::clamp(3 + k, 3, K - 1);
}

TEST(Bucketize, SpecialValues) {
  EXPECT_EQ(Bucketize(-1, 2, 16), 1);
  EXPECT_EQ(Bucketize(-7, 2, 16), 1);
  EXPECT_EQ(Bucketize(0, 2, 16), 2);
  EXPECT_EQ(Bucketize(0.5, 2, 16), 3);  // clamped from below
  EXPECT_EQ(Bucketize(1, 2, 16), 3);
  EXPECT_EQ(Bucketize(2, 2, 16), 4);
  EXPECT_EQ(Bucketize(1e300, 2, 16), 15);
  EXPECT_THROW(Bucketize(std::nan(""), 2, 16), NumericError);
  EXPECT_THROW(Bucketize(1, 1, 16), ConfigError);
  EXPECT_THROW(Bucketize(1, 2, 3), ConfigError);
}

TEST(Bucketize, ExactAtPowers) {
  for (int base : {2, 3, 10}) {
    double p = 1;
    for (int k = 0; k < 10; ++k, p *= base) {
      EXPECT_EQ(Bucketize(p, base, 64), 3 + k) << base << "^" << k;
      EXPECT_EQ(Bucketize(p * 0.999, base, 64), std::max(3, 2 + k));
    }
  }
}

TEST(Bucketize, MatchesLogOracleAndIsMonotone) {
  std::mt19937_64 rng(1);
  int prev = 0;
  for (int i = 0; i < 2000; ++i) {
    const double v = std::exp(UnitUniform(rng) * 30 - 5);
    const double r = std::exp(-5 + 30.0 * i / 2000);
    EXPECT_EQ(Bucketize(v, 2, 24), OracleBucket(v, 2, 24)) << v;
    const int b = Bucketize(r, 2, 24);
    EXPECT_GE(b, prev);
    prev = b;
  }
}

class EmbeddingsTest : public ::testing::Test {
 protected:
  EmbeddingsTest() : rng_(3), emb_(Schema::Standard(vocab_, KeyField::kItemId), 4, params_, rng_) {}
  VocabSizes vocab_;
  ParameterSet params_;
  std::mt19937_64 rng_;
  Embeddings emb_;
};

TEST_F(EmbeddingsTest, CategoricalFoldsOutOfVocabulary) {
  EXPECT_EQ(emb_.Categorical(Field::kItemId, 0), 1);
  EXPECT_EQ(emb_.Categorical(Field::kItemId, 41), 42);
  emb_.ResetOovCount();
  EXPECT_EQ(emb_.Categorical(Field::kItemId, 1000000), 0);
  EXPECT_EQ(emb_.Categorical(Field::kItemId, -3), 0);
  EXPECT_EQ(emb_.oov_count(), 2);
  const int K = emb_.schema().Get(Field::kItemId).cardinality;
  EXPECT_EQ(emb_.Categorical(Field::kItemId, K - 2), K - 1);
  EXPECT_EQ(emb_.Categorical(Field::kItemId, K - 1), 0);
}

TEST_F(EmbeddingsTest, TimestampIndexEncodesAgeAndWeekend) {
  const std::int64_t ref = 1672617600;  // Monday
  const std::int64_t saturday = ref - 2 * kSecondsPerDay + 100;
  const std::int64_t friday = ref - 3 * kSecondsPerDay + 100;
  EXPECT_EQ(emb_.TimestampIndex(saturday, ref) % 2, 1);
  EXPECT_EQ(emb_.TimestampIndex(friday, ref) % 2, 0);
  EXPECT_LE(emb_.TimestampIndex(saturday, ref) / 2, emb_.TimestampIndex(friday, ref) / 2);
  EXPECT_EQ(emb_.TimestampIndex(ref + 50, ref), 2 * 2);  // future clamps to age 0
  EXPECT_LT(emb_.TimestampIndex(0, ref), emb_.schema().Get(Field::kTimestamp).cardinality);
}

TEST_F(EmbeddingsTest, EmbedRowsConcatenatesAndScattersGradient) {
  const std::array<Field, 2> fields = {Field::kCategoryId, Field::kSurface};
  IndexColumns idx;
  AppendRow(idx, std::array<int, 2>{3, 1});
  AppendRow(idx, std::array<int, 2>{3, 2});
  Tape t;
  Var rows = emb_.EmbedRows(t, fields, idx);
  const ValueGrid& v = t.Value(rows);
  ASSERT_EQ(v.cols(), 8);
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(v(0, c), emb_.Table(Field::kCategoryId).value(3, c));
    EXPECT_EQ(v(1, 4 + c), emb_.Table(Field::kSurface).value(2, c));
  }
  params_.ZeroGrad();
  t.Backward(ad::Sum(t, rows));
  const Parameter& cat = emb_.Table(Field::kCategoryId);
  for (int r = 0; r < cat.rows(); ++r)
    for (int c = 0; c < 4; ++c) EXPECT_EQ(cat.grad(r, c), r == 3 ? 2.0 : 0.0);
}

TEST(Schema, CategoryModeAddsItemCountStats) {
  VocabSizes vocab;
  const Schema item = Schema::Standard(vocab, KeyField::kItemId);
  const Schema cat = Schema::Standard(vocab, KeyField::kCategoryId);
  EXPECT_FALSE(item.Has(Field::kStatDistinctItems));
  EXPECT_TRUE(cat.Has(Field::kStatDistinctItems));
  EXPECT_EQ(item.StatFields().size(), 10u);
  EXPECT_EQ(cat.StatFields().size(), 12u);
  EXPECT_EQ(cat.MemberFields().size(), 4u);
  EXPECT_NE(item.Hash(), cat.Hash());
  EXPECT_EQ(item.Hash(), Schema::Standard(vocab, KeyField::kItemId).Hash());
  vocab.items = 1001;
  EXPECT_NE(item.Hash(), Schema::Standard(vocab, KeyField::kItemId).Hash());
}

}  // namespace
}  // namespace dgin
