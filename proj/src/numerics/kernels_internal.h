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

#ifndef DGIN_SRC_NUMERICS_KERNELS_INTERNAL_H_
#define DGIN_SRC_NUMERICS_KERNELS_INTERNAL_H_

#include "dgin/numerics/kernels.h"

namespace dgin::simd {

// Defined in kernels_avx2.cc; returns nullptr when compiled without AVX2.
const KernelTable* CompiledAvx2Kernels();

}  // namespace dgin::simd

#endif  // DGIN_SRC_NUMERICS_KERNELS_INTERNAL_H_
