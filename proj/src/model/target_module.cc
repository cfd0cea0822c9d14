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

#include "dgin/model/target_module.h"

#include "dgin/error.h"

namespace dgin {
namespace {

FeedForwardParams MakeFfn(ParameterSet& params, const std::string& prefix, int width, int hidden,
                          std::mt19937_64& rng) {
  FeedForwardParams p;
  p.w1 = &params.Create(prefix + "/w1", width, hidden, Init::kGlorotUniform, rng);
  p.b1 = &params.Create(prefix + "/b1", 1, hidden, Init::kZeros, rng);
  p.w2 = &params.Create(prefix + "/w2", hidden, width, Init::kGlorotUniform, rng);
  p.b2 = &params.Create(prefix + "/b2", 1, width, Init::kZeros, rng);
  return p;
}

}  // namespace

TargetModule::TargetModule(const TargetModuleConfig& config, ParameterSet& params, std::mt19937_64& rng)
    : config_(config) {
  const int md = config.behavior_width();
  if (config.heads < 1 || md % config.heads != 0) {
    throw ConfigError("target module: heads " + std::to_string(config.heads) + " must divide m*d = " +
                      std::to_string(md));
  }
  proj_w_ = &params.Create("tm/proj_candidate/w", config.candidate_width(), md, Init::kGlorotUniform, rng);
  proj_b_ = &params.Create("tm/proj_candidate/b", 1, md, Init::kZeros, rng);
  enc_attn_ = AttentionParams::Create(params, "tm/enc_mhsa", md, md, md, config.heads, rng);
  enc_ffn_ = MakeFfn(params, "tm/enc_ffn", md, config.ffn_hidden(), rng);
  dec_attn_ = AttentionParams::Create(params, "tm/dec_mhta", md, md, md, config.heads, rng);
  dec_ffn_ = MakeFfn(params, "tm/dec_ffn", md, config.ffn_hidden(), rng);
  for (int i = 0; i < 4; ++i) {
    const std::string prefix = "tm/ln" + std::to_string(i + 1);
    ln_[i].gain = &params.Create(prefix + "/gain", 1, md, Init::kOnes, rng);
    ln_[i].shift = &params.Create(prefix + "/shift", 1, md, Init::kZeros, rng);
  }
  null_ = &params.Create("tm/null_decision", 1, md, Init::kZeros, rng);
}

Var TargetModule::ProjectCandidate(Tape& t, Var candidate) const {
  return ad::Linear(t, candidate, t.Leaf(*proj_w_), t.Leaf(*proj_b_));
}

Var TargetModule::Ffn(Tape& t, const FeedForwardParams& p, Var x) const {
  return ad::FeedForward(t, x, t.Leaf(*p.w1), t.Leaf(*p.b1), t.Leaf(*p.w2), t.Leaf(*p.b2));
}

Var TargetModule::Norm(Tape& t, int i, Var x) const {
  return ad::LayerNorm(t, x, t.Leaf(*ln_[i].gain), t.Leaf(*ln_[i].shift));
}

Var TargetModule::Encode(Tape& t, Var e_t, std::span<const AttentionSegment> segs,
                         std::span<const std::uint8_t> mask) const {
  Var pre = Norm(t, 0, ad::Add(t, e_t, MultiHeadAttention(t, enc_attn_, e_t, e_t, segs, mask)));
  return Norm(t, 1, ad::Add(t, pre, Ffn(t, enc_ffn_, pre)));
}

Var TargetModule::Decode(Tape& t, Var c_proj, Var out_enc, std::span<const AttentionSegment> segs,
                         std::span<const std::uint8_t> mask) const {
  Var pre = Norm(t, 2, ad::Add(t, c_proj, MultiHeadAttention(t, dec_attn_, c_proj, out_enc, segs, mask)));
  return Norm(t, 3, ad::Add(t, pre, Ffn(t, dec_ffn_, pre)));
}

TargetModule::Output TargetModule::Forward(Tape& t, Var e_t, std::span<const RowRange> sequences, Var candidate,
                                           std::span<const int> query_sequence) const {
  const int md = config_.behavior_width();
  const int n = t.Value(candidate).rows();
  if (static_cast<int>(query_sequence.size()) != n) {
    throw DimensionError("TargetModule: " + std::to_string(query_sequence.size()) + " sequence ids for " +
                         std::to_string(n) + " candidates");
  }
  Output out;
  out.used_null.assign(n, 0);
  std::vector<int> live;
  std::vector<AttentionSegment> dec_segs;
  for (int i = 0; i < n; ++i) {
    const int s = query_sequence[i];
    if (s < 0 || sequences[s].end <= sequences[s].begin) {
      out.used_null[i] = 1;
      continue;
    }
    const int row = static_cast<int>(live.size());
    live.push_back(i);
    dec_segs.push_back(AttentionSegment{row, row + 1, sequences[s].begin, sequences[s].end});
  }
  if (live.empty()) {
    std::vector<int> zeros(n, 0);
    out.interest = ad::SelectRows(t, t.Leaf(*null_), zeros);
    return out;
  }
  if (t.Value(e_t).cols() != md) {
    throw DimensionError("TargetModule: subsequence width " + std::to_string(t.Value(e_t).cols()) +
                         ", expected m*d = " + std::to_string(md));
  }
  std::vector<AttentionSegment> enc_segs;
  for (const RowRange& r : sequences)
    if (r.end > r.begin) enc_segs.push_back(AttentionSegment{r.begin, r.end, r.begin, r.end});
  out.out_enc = Encode(t, e_t, enc_segs, {});
  Var cand = live.size() == static_cast<std::size_t>(n) ? candidate : ad::SelectRows(t, candidate, live);
  Var dec = Decode(t, ProjectCandidate(t, cand), out.out_enc, dec_segs, {});
  if (live.size() == static_cast<std::size_t>(n)) {
    out.interest = dec;
    return out;
  }
  std::vector<int> pick(n);
  const int null_row = static_cast<int>(live.size());
  int next = 0;
  for (int i = 0; i < n; ++i) pick[i] = out.used_null[i] ? null_row : next++;
  const Var stacked[2] = {dec, t.Leaf(*null_)};
  out.interest = ad::SelectRows(t, ad::ConcatRows(t, stacked), pick);
  return out;
}

TargetModule::Output TargetModule::ForwardMasked(Tape& t, Var e_t, std::span<const std::uint8_t> seq_mask,
                                                 Var candidate) const {
  const int md = config_.behavior_width();
  const ValueGrid& x = t.Value(e_t);
  if (x.cols() != md) {
    throw DimensionError("TargetModule: subsequence width " + std::to_string(x.cols()) + ", expected m*d = " +
                         std::to_string(md));
  }
  Output out;
  bool any = false;
  for (std::uint8_t m : seq_mask) any = any || m != 0;
  if (x.rows() == 0 || (!seq_mask.empty() && !any)) {
    out.interest = t.Leaf(*null_);
    out.used_null = {1};
    return out;
  }
  out.used_null = {0};
  const AttentionSegment enc{0, x.rows(), 0, x.rows()};
  out.out_enc = Encode(t, e_t, std::span(&enc, 1), seq_mask);
  const AttentionSegment dec{0, 1, 0, x.rows()};
  out.interest = Decode(t, ProjectCandidate(t, candidate), out.out_enc, std::span(&dec, 1), seq_mask);
  return out;
}

}  // namespace dgin
