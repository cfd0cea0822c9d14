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

#ifndef DGIN_NUMERICS_TAPE_H_
#define DGIN_NUMERICS_TAPE_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "dgin/numerics/parameter.h"
#include "dgin/numerics/value_grid.h"

namespace dgin {

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Records a forward computation over ValueGrids and replays it backwards.
// A tape is single-use and single-threaded: build, call Backward once, then
// discard. Parameter gradients accumulate into Parameter::grad.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const ValueGrid& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(ValueGrid value);
  // Leaf bound to a parameter; repeated calls for the same parameter return
  // the same node.
  Var Leaf(Parameter& p);

  const ValueGrid& Value(Var v) const { return nodes_.at(v.id).value; }
  // Gradient of the loss with respect to v; zeros if v was not on the path.
  const ValueGrid& Grad(Var v);
  bool RequiresGrad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be 1x1.
  void Backward(Var loss);

  // Appends an op result. inputs decide whether the node needs a gradient.
  Var Record(ValueGrid value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var Record(ValueGrid value, std::span<const Var> inputs, BackwardFn backward);
  // Node whose gradient is routed into a parameter without a dense leaf.
  Var RecordParameterOp(ValueGrid value, BackwardFn backward);

  // Gradient accumulator for a node, allocated on first use.
  ValueGrid& AccumulateGrad(int id);

 private:
  struct Node {
    ValueGrid value;
    ValueGrid grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> leaves_;
  bool backward_done_ = false;
};

// Query/key row ranges handled by one attention problem. Keys may be shared
// between segments (several queries attending over the same rows).
struct AttentionSegment {
  int query_begin = 0;
  int query_end = 0;
  int key_begin = 0;
  int key_end = 0;
};

// Contiguous row range [begin, end).
struct RowRange {
  int begin = 0;
  int end = 0;
};

namespace ad {

// out = a * b
Var MatMul(Tape& t, Var a, Var b);
// out = x + 1^T bias (bias is 1 x cols)
Var AddBias(Tape& t, Var x, Var bias);
// out = x w (+ bias when valid)
Var Linear(Tape& t, Var x, Var w, Var bias = {});
Var Add(Tape& t, Var a, Var b);
Var Sub(Tape& t, Var a, Var b);
Var Mul(Tape& t, Var a, Var b);
Var Scale(Tape& t, Var a, double s);
Var Relu(Tape& t, Var x);
Var Sigmoid(Tape& t, Var x);

Var ConcatCols(Tape& t, std::span<const Var> parts);
Var ConcatRows(Tape& t, std::span<const Var> parts);
Var SliceCols(Tape& t, Var x, int begin, int end);
// out row i = x row index[i]; indices may repeat.
Var SelectRows(Tape& t, Var x, std::span<const int> index);
// out row i = table row index[i]; gradient scatters into table.grad.
Var Gather(Tape& t, Parameter& table, std::span<const int> index);

// Row softmax, stabilized by the row max. Masked entries (mask value 0) get
// probability exactly 0; a row with no unmasked entry is a precondition error.
Var SoftmaxRows(Tape& t, Var x, std::span<const std::uint8_t> mask = {});
Var LayerNorm(Tape& t, Var x, Var gain, Var shift, double eps = 1e-5);
// relu(x w1 + b1) w2 + b2
Var FeedForward(Tape& t, Var x, Var w1, Var b1, Var w2, Var b2);

// out row s = mean of x rows in ranges[s]; every range must be nonempty.
Var SegmentMean(Tape& t, Var x, std::span<const RowRange> ranges);

// Multi-head scaled dot-product attention. q: Nq x (h*dk), k: Nk x (h*dk),
// v: Nk x (h*dv). Query rows of each segment attend over that segment's key
// rows; query rows not covered by any segment are left zero. key_mask (one
// byte per key row, optional) removes keys from every softmax.
Var Attention(Tape& t, Var q, Var k, Var v, int heads, std::span<const AttentionSegment> segments,
              std::span<const std::uint8_t> key_mask = {});

Var Sum(Tape& t, Var x);
Var Mean(Tape& t, Var x);
// Mean negative log-likelihood of labels under probabilities p (N x 1),
// with p clamped to [1e-12, 1 - 1e-12].
Var BinaryCrossEntropy(Tape& t, Var p, std::span<const double> labels);

}  // namespace ad
}  // namespace dgin

#endif  // DGIN_NUMERICS_TAPE_H_
