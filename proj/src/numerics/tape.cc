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

#include "dgin/numerics/tape.h"

#include "dgin/error.h"
#include "dgin/numerics/kernels.h"

namespace dgin {

Var Tape::Constant(ValueGrid value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Leaf(Parameter& p) {
  auto it = leaves_.find(&p);
  if (it != leaves_.end()) return Var{it->second};
  Node& n = nodes_.emplace_back();
  n.value = p.value;
  n.requires_grad = true;
  Parameter* target = &p;
  n.backward = [target](Tape&, const ValueGrid& g) {
    simd::Active().add(static_cast<int>(g.size()), g.data(), target->grad.data());
  };
  const int id = static_cast<int>(nodes_.size()) - 1;
  leaves_[&p] = id;
  return Var{id};
}

Var Tape::Record(ValueGrid value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return Record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::Record(ValueGrid value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (Var v : inputs) needs = needs || nodes_.at(v.id).requires_grad;
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::RecordParameterOp(ValueGrid value, BackwardFn backward) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = true;
  n.backward = std::move(backward);
  return Var{static_cast<int>(nodes_.size()) - 1};
}

ValueGrid& Tape::AccumulateGrad(int id) {
  Node& n = nodes_.at(id);
  if (n.grad.empty() && !n.value.empty()) n.grad = ValueGrid(n.value.rows(), n.value.cols());
  return n.grad;
}

const ValueGrid& Tape::Grad(Var v) { return AccumulateGrad(v.id); }

void Tape::Backward(Var loss) {
  if (!loss.valid() || loss.id >= static_cast<int>(nodes_.size())) {
    throw UsageError("Backward called without a recorded forward pass");
  }
  if (backward_done_) throw UsageError("Backward called twice on one tape");
  const ValueGrid& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw UsageError("Backward needs a 1x1 loss, got " + lv.ShapeString());
  }
  backward_done_ = true;
  if (!nodes_[loss.id].requires_grad) return;
  AccumulateGrad(loss.id)(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

}  // namespace dgin
