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

#ifndef DGIN_NUMERICS_ADAM_H_
#define DGIN_NUMERICS_ADAM_H_

#include <span>

#include "dgin/numerics/parameter.h"

namespace dgin {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over every parameter, then zeroes the
// gradients. If any gradient is non-finite nothing is updated and a
// NumericError naming the first offending parameter is thrown.
void AdamStep(std::span<Parameter* const> params, const AdamOptions& options);

}  // namespace dgin

#endif  // DGIN_NUMERICS_ADAM_H_
