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

#ifndef DGIN_NUMERICS_KERNELS_H_
#define DGIN_NUMERICS_KERNELS_H_

// Dense inner-loop kernels. Every kernel has a portable scalar reference and,
// when the build enables it, an AVX2/FMA variant. The active table is chosen
// once at startup from CPUID; DGIN_SIMD=scalar in the environment forces the
// reference path.
//
// Reduction-order contract, shared by all variants:
//   * GemmNN / GemmTN accumulate each output element sequentially over the
//     inner index, so a row of the output depends only on the matching input
//     row, never on how many rows were batched together.
//   * GemmNT keeps the same row independence; the scalar variant reduces each
//     element with Dot, the AVX2 variant transposes b and runs GemmNN.
//   * Dot reduces with a fixed, size-dependent order.
// Variants differ only by rounding (fused multiply-add, lane-split sums).

#include <string_view>

namespace dgin::simd {

struct KernelTable {
  std::string_view name;
  // c[n x m] += a[n x k] * b[k x m]
  void (*gemm_nn)(int n, int k, int m, const double* a, const double* b, double* c);
  // c[n x m] += a[n x k] * b[m x k]^T
  void (*gemm_nt)(int n, int k, int m, const double* a, const double* b, double* c);
  // c[k x m] += a[n x k]^T * b[n x m]
  void (*gemm_tn)(int n, int k, int m, const double* a, const double* b, double* c);
  double (*dot)(int n, const double* x, const double* y);
  // y += alpha * x
  void (*axpy)(int n, double alpha, const double* x, double* y);
  // y += x
  void (*add)(int n, const double* x, double* y);
};

const KernelTable& ScalarKernels();
// nullptr when AVX2 support was not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* Avx2Kernels();
// The table used by the numerics layer.
const KernelTable& Active();
// Overrides the active table (tests and benchmarks).
void SetActive(const KernelTable& table);

}  // namespace dgin::simd

#endif  // DGIN_NUMERICS_KERNELS_H_
