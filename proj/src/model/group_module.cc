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

#include "dgin/model/group_module.h"


#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dgin/error.h"

namespace dgin {
namespace {

std::vector<Field> IdentityFieldList() {
  const auto& f = Schema::IdentityFields();
  return {f.begin(), f.end()};
}

}  // namespace

AttentionParams AttentionParams::Create(ParameterSet& params, const std::string& prefix, int query_in, int kv_in,
                                        int width, int heads, std::mt19937_64& rng) {
  if (heads < 1 || width % heads != 0) {
    throw ConfigError(prefix + ": " + std::to_string(heads) + " heads do not divide width " + std::to_string(width));
  }
  AttentionParams p;
  p.heads = heads;
  p.wq = &params.Create(prefix + "/wq", query_in, width, Init::kGlorotUniform, rng);
  p.wk = &params.Create(prefix + "/wk", kv_in, width, Init::kGlorotUniform, rng);
  p.wv = &params.Create(prefix + "/wv", kv_in, width, Init::kGlorotUniform, rng);
  p.wo = &params.Create(prefix + "/wo", width, width, Init::kGlorotUniform, rng);
  return p;
}

Var MultiHeadAttention(Tape& t, const AttentionParams& p, Var query_in, Var kv_in,
                       std::span<const AttentionSegment> segments, std::span<const std::uint8_t> key_mask) {
  Var q = ad::MatMul(t, query_in, t.Leaf(*p.wq));
  Var k = ad::MatMul(t, kv_in, t.Leaf(*p.wk));
  Var v = ad::MatMul(t, kv_in, t.Leaf(*p.wv));
  Var heads = ad::Attention(t, q, k, v, p.heads, segments, key_mask);
  return ad::MatMul(t, heads, t.Leaf(*p.wo));
}

GroupBatch MakeGroupBatch(const Embeddings& emb, std::span<const InterestGroup* const> groups,
                          std::int64_t reference_timestamp) {
  GroupBatch b;
  const std::size_t mf = emb.schema().MemberFields().size();
  b.member_idx.resize(mf);
  b.identity_idx.resize(3);
  b.stat_idx.resize(emb.schema().StatFields().size());
  int row = 0;
  for (const InterestGroup* g : groups) {
    const int begin = row;
    for (const MemberRecord& m : g->members) {
      AppendRow(b.member_idx, emb.MemberIndices(m, reference_timestamp));
      ++row;
    }
    if (row == begin) throw PreconditionError("MakeGroupBatch: group without members");
    b.member_ranges.push_back(RowRange{begin, row});
    AppendRow(b.identity_idx, emb.IdentityIndices(*g));
    AppendRow(b.stat_idx, emb.StatIndices(g->stats));
  }
  return b;
}

GroupModule::GroupModule(const GroupModuleConfig& config, ParameterSet& params, std::mt19937_64& rng)
    : config_(config) {
  const int mw = config.member_width();
  const int dg = config.group_width();
  if (mw % config.heads != 0 || dg % config.heads != 0) {
    throw ConfigError("group module: heads " + std::to_string(config.heads) + " must divide member width " +
                      std::to_string(mw) + " and group width " + std::to_string(dg));
  }
  if (config.use_agg) self_ = AttentionParams::Create(params, "gm/mhsa", mw, mw, mw, config.heads, rng);
  target_ = AttentionParams::Create(params, "gm/mhta", config.candidate_width(), dg, dg, config.heads, rng);
  // Candidate and identity item, category and price share embedding tables;
  // starting Wk equal to Wq on those rows makes a matching group score high
  // from the first step.
  for (int r = 0; r < config.identity_width(); ++r)
    for (int c = 0; c < dg; ++c) target_.wk->value(r, c) = target_.wq->value(r, c);
  null_ = &params.Create("gm/null_interest", 1, dg, Init::kZeros, rng);
}

Var GroupModule::Mhsa(Tape& t, Var e_b, std::span<const std::uint8_t> member_mask) const {
  if (self_.wq == nullptr) throw UsageError("group module built without the aggregated attribute");
  const ValueGrid& x = t.Value(e_b);
  if (x.cols() != config_.member_width()) {
    throw DimensionError("Mhsa: member rows have width " + std::to_string(x.cols()) + ", expected " +
                         std::to_string(config_.member_width()));
  }
  const AttentionSegment seg{0, x.rows(), 0, x.rows()};
  return MultiHeadAttention(t, self_, e_b, e_b, std::span(&seg, 1), member_mask);
}

Var GroupModule::Aggregate(Tape& t, Var mhsa_out, std::span<const std::uint8_t> member_mask) {
  const int n = t.Value(mhsa_out).rows();
  std::vector<int> keep;
  for (int r = 0; r < n; ++r)
    if (member_mask.empty() || member_mask[r]) keep.push_back(r);
  if (keep.empty()) throw PreconditionError("Aggregate: every member row is masked");
  Var rows = ad::SelectRows(t, mhsa_out, keep);
  const RowRange all{0, static_cast<int>(keep.size())};
  return ad::SegmentMean(t, rows, std::span(&all, 1));
}

Var GroupModule::GroupRows(Tape& t, const Embeddings& emb, const GroupBatch& batch) const {
  const std::vector<Field> id_fields = IdentityFieldList();
  std::vector<Var> parts;
  parts.push_back(emb.EmbedRows(t, id_fields, batch.identity_idx));
  if (config_.use_stats) {
    const std::vector<Field> stat_fields = emb.schema().StatFields();
    parts.push_back(emb.EmbedRows(t, stat_fields, batch.stat_idx));
  }
  if (config_.use_agg) {
    const std::vector<Field> member_fields = emb.schema().MemberFields();
    Var e_b = emb.EmbedRows(t, member_fields, batch.member_idx);
    std::vector<AttentionSegment> segs;
    segs.reserve(batch.member_ranges.size());
    for (const RowRange& r : batch.member_ranges) segs.push_back(AttentionSegment{r.begin, r.end, r.begin, r.end});
    Var mhsa = MultiHeadAttention(t, self_, e_b, e_b, segs);
    parts.push_back(ad::SegmentMean(t, mhsa, batch.member_ranges));
  }
  return parts.size() == 1 ? parts[0] : ad::ConcatCols(t, parts);
}

Var GroupModule::Mhta(Tape& t, Var candidate, Var e_g, std::span<const RowRange> key_ranges) const {
  const int n = t.Value(candidate).rows();
  if (static_cast<int>(key_ranges.size()) != n) {
    throw DimensionError("Mhta: " + std::to_string(key_ranges.size()) + " key ranges for " + std::to_string(n) +
                         " queries");
  }
  // Every distinct key range is copied once into a key block followed by the
  // null group row, so a candidate that matches no group can attend to it.
  const int null_row = t.Value(e_g).rows();
  std::map<std::pair<int, int>, int> block_of;
  std::vector<int> gather;
  std::vector<AttentionSegment> segs;
  std::vector<int> pick(n);
  int live = 0;
  bool any_null = false;
  for (int i = 0; i < n; ++i) {
    const RowRange r = key_ranges[i];
    if (r.end <= r.begin) {
      pick[i] = -1;
      any_null = true;
      continue;
    }
    auto [it, fresh] = block_of.try_emplace({r.begin, r.end}, static_cast<int>(gather.size()));
    if (fresh) {
      for (int k = r.begin; k < r.end; ++k) gather.push_back(k);
      gather.push_back(null_row);
    }
    segs.push_back(AttentionSegment{live, live + 1, it->second, it->second + (r.end - r.begin) + 1});
    pick[i] = live++;
  }
  Var out;
  if (live > 0) {
    const Var stacked[2] = {e_g, t.Leaf(*null_)};
    Var keys = ad::SelectRows(t, ad::ConcatRows(t, stacked), gather);
    std::vector<int> queries;
    for (int i = 0; i < n; ++i)
      if (pick[i] >= 0) queries.push_back(i);
    Var q = live == n ? candidate : ad::SelectRows(t, candidate, queries);
    out = MultiHeadAttention(t, target_, q, keys, segs);
  }
  if (!any_null) return out;
  for (int& p : pick)
    if (p < 0) p = live;
  Var null_value = t.Leaf(*null_);
  if (live == 0) return ad::SelectRows(t, null_value, std::vector<int>(n, 0));
  const Var rows[2] = {out, null_value};
  return ad::SelectRows(t, ad::ConcatRows(t, rows), pick);
}

Var GroupModule::MhtaMasked(Tape& t, Var candidate, Var e_g, std::span<const std::uint8_t> group_mask) const {
  bool any = false;
  for (std::uint8_t m : group_mask) any = any || m != 0;
  if (!any) return t.Leaf(*null_);
  const Var stacked[2] = {e_g, t.Leaf(*null_)};
  std::vector<std::uint8_t> mask(group_mask.begin(), group_mask.end());
  mask.push_back(1);
  const AttentionSegment seg{0, 1, 0, static_cast<int>(mask.size())};
  return MultiHeadAttention(t, target_, candidate, ad::ConcatRows(t, stacked), std::span(&seg, 1), mask);
}

GroupMatrix BuildGroupMatrix(Tape& t, const GroupModule& gm, const Embeddings& emb, const GroupedSequence& grouped,
                             int G, std::int64_t reference_timestamp) {
  const int n = static_cast<int>(grouped.groups.size());
  if (n > G) throw PreconditionError("BuildGroupMatrix: " + std::to_string(n) + " groups exceed G=" + std::to_string(G));
  GroupMatrix out;
  out.mask.assign(G, 0);
  for (int i = 0; i < n; ++i) out.mask[i] = 1;
  const int width = gm.config().group_width();
  if (n == 0) {
    out.e_g = t.Constant(ValueGrid(G, width));
    return out;
  }
  std::vector<const InterestGroup*> ptrs;
  for (const InterestGroup& g : grouped.groups) ptrs.push_back(&g);
  Var rows = gm.GroupRows(t, emb, MakeGroupBatch(emb, ptrs, reference_timestamp));
  if (n == G) {
    out.e_g = rows;
    return out;
  }
  const Var parts[2] = {rows, t.Constant(ValueGrid(G - n, width))};
  out.e_g = ad::ConcatRows(t, parts);
  return out;
}

void GroupCache::Put(std::int64_t user_id, ValueGrid rows) { rows_[user_id] = std::move(rows); }

const ValueGrid* GroupCache::Get(std::int64_t user_id) const {
  auto it = rows_.find(user_id);
  return it == rows_.end() ? nullptr : &it->second;
}

void GroupCache::Save(const std::filesystem::path& dir) const {
  static_assert(std::endian::native == std::endian::little, "cache files are little-endian");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create cache directory " + dir.string());
  int width = 0;
  for (const auto& [id, g] : rows_) width = std::max(width, g.cols());
  std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
  std::ofstream bin(dir / "rows.bin", std::ios::binary | std::ios::trunc);
  if (!manifest || !bin) throw IoError("cannot write cache files in " + dir.string());
  manifest << "dgin-eg-cache 1\nwidth " << width << "\nusers " << rows_.size() << "\n";
  std::uint64_t offset = 0;
  for (const auto& [id, g] : rows_) {
    if (g.rows() > 0 && g.cols() != width) throw DimensionError("cache rows of mixed width");
    manifest << id << ' ' << g.rows() << ' ' << offset << '\n';
    bin.write(reinterpret_cast<const char*>(g.data()), static_cast<std::streamsize>(g.size() * sizeof(double)));
    offset += g.size() * sizeof(double);
  }
  if (!manifest || !bin) throw IoError("write failure on cache in " + dir.string());
}

GroupCache GroupCache::Load(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  std::ifstream bin(dir / "rows.bin", std::ios::binary);
  if (!manifest || !bin) throw IoError("cannot open cache in " + dir.string());
  std::string magic, version, key;
  int width = 0;
  std::size_t users = 0;
  manifest >> magic >> version;
  if (magic != "dgin-eg-cache" || version != "1") throw DataError("not a group cache: " + dir.string());
  manifest >> key >> width;
  if (key != "width") throw DataError("cache manifest: expected width");
  manifest >> key >> users;
  if (key != "users") throw DataError("cache manifest: expected users");
  GroupCache cache;
  for (std::size_t i = 0; i < users; ++i) {
    std::int64_t id = 0;
    int rows = 0;
    std::uint64_t offset = 0;
    if (!(manifest >> id >> rows >> offset)) throw DataError("cache manifest truncated");
    ValueGrid g(rows, rows > 0 ? width : 0);
    bin.seekg(static_cast<std::streamoff>(offset));
    bin.read(reinterpret_cast<char*>(g.data()), static_cast<std::streamsize>(g.size() * sizeof(double)));
    if (!bin) throw IoError("cache rows.bin truncated");
    cache.Put(id, std::move(g));
  }
  return cache;
}

}  // namespace dgin
