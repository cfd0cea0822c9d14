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

#include "dgin/numerics/adam.h"

#include <cmath>

#include "dgin/error.h"

namespace dgin {

void AdamStep(std::span<Parameter* const> params, const AdamOptions& options) {
  for (const Parameter* p : params) {
    if (!p->grad.AllFinite()) throw NumericError("non-finite gradient in parameter " + p->name);
  }
  for (Parameter* p : params) {
    p->step_count += 1;
    const double t = static_cast<double>(p->step_count);
    const double c1 = 1.0 - std::pow(options.beta1, t);
    const double c2 = 1.0 - std::pow(options.beta2, t);
    double* w = p->value.data();
    double* g = p->grad.data();
    double* m = p->adam_m.data();
    double* v = p->adam_v.data();
    const std::size_t n = p->value.size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g[i];
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= options.lr * mhat / (std::sqrt(vhat) + options.eps);
      g[i] = 0.0;
    }
  }
}

}  // namespace dgin
