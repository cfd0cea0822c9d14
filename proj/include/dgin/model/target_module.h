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

#ifndef DGIN_MODEL_TARGET_MODULE_H_
#define DGIN_MODEL_TARGET_MODULE_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dgin/model/group_module.h"
#include "dgin/numerics/tape.h"

namespace dgin {

struct TargetModuleConfig {
  int d = 8;
  int heads = 2;
  int behavior_width() const { return 7 * d; }  // m * d
  int candidate_width() const { return 4 * d; }
  int ffn_hidden() const { return 2 * behavior_width(); }
};

struct FeedForwardParams {
  Parameter* w1 = nullptr;
  Parameter* b1 = nullptr;
  Parameter* w2 = nullptr;
  Parameter* b2 = nullptr;
};

struct LayerNormParams {
  Parameter* gain = nullptr;
  Parameter* shift = nullptr;
};

// The Target Module. Encoder over the candidate-keyed subsequence:
//   out_enc_pre = LN(e_t + MHSA(e_t));  out_enc = LN(out_enc_pre + FFN(out_enc_pre))
// Decoder with the projected candidate c as the single query:
//   out_dec_pre = LN(c + MHTA(c, out_enc));  interest = LN(out_dec_pre + FFN(out_dec_pre))
class TargetModule {
 public:
  struct Output {
    Var interest;       // N x md
    Var out_enc;        // encoder rows (packed like e_t)
    std::vector<std::uint8_t> used_null;  // per query row
  };

  TargetModule(const TargetModuleConfig& config, ParameterSet& params, std::mt19937_64& rng);

  const TargetModuleConfig& config() const { return config_; }
  Parameter& null_decision() const { return *null_; }
  const AttentionParams& encoder_attention() const { return enc_attn_; }
  const AttentionParams& decoder_attention() const { return dec_attn_; }
  const FeedForwardParams& encoder_ffn() const { return enc_ffn_; }
  const FeedForwardParams& decoder_ffn() const { return dec_ffn_; }
  const LayerNormParams& ln(int i) const { return ln_[i]; }
  Parameter& projection_weight() const { return *proj_w_; }
  Parameter& projection_bias() const { return *proj_b_; }

  // Linear bridge D_c -> m*d.
  Var ProjectCandidate(Tape& t, Var candidate) const;

  // Packed form: e_t holds the rows of every subsequence, sequences[s] their
  // row range; query i decodes against sequences[query_sequence[i]], or the
  // null-decision vector when query_sequence[i] < 0.
  Output Forward(Tape& t, Var e_t, std::span<const RowRange> sequences, Var candidate,
                 std::span<const int> query_sequence) const;
  // One candidate over a padded T x md subsequence with a mask.
  Output ForwardMasked(Tape& t, Var e_t, std::span<const std::uint8_t> seq_mask, Var candidate) const;

 private:
  Var Encode(Tape& t, Var e_t, std::span<const AttentionSegment> segs, std::span<const std::uint8_t> mask) const;
  Var Decode(Tape& t, Var c_proj, Var out_enc, std::span<const AttentionSegment> segs,
             std::span<const std::uint8_t> mask) const;
  Var Ffn(Tape& t, const FeedForwardParams& p, Var x) const;
  Var Norm(Tape& t, int i, Var x) const;

  TargetModuleConfig config_;
  Parameter* proj_w_ = nullptr;
  Parameter* proj_b_ = nullptr;
  AttentionParams enc_attn_;
  AttentionParams dec_attn_;
  FeedForwardParams enc_ffn_;
  FeedForwardParams dec_ffn_;
  LayerNormParams ln_[4];
  Parameter* null_ = nullptr;
};

}  // namespace dgin

#endif  // DGIN_MODEL_TARGET_MODULE_H_
