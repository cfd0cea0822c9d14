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

// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// is only entered after a CPUID check.

#include "kernels_internal.h"

#if defined(DGIN_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace dgin::simd {
namespace {

// Per-element order: c = fma(a[i][p], b[p][j], c) for p = 0..k-1.
template <int R>
inline void NNRows(int k, int m, const double* a, const double* b, double* c) {
  int j = 0;
  for (; j + 12 <= m; j += 12) {
    __m256d acc[R][3];
    for (int r = 0; r < R; ++r)
      for (int v = 0; v < 3; ++v) acc[r][v] = _mm256_loadu_pd(c + static_cast<long>(r) * m + j + 4 * v);
    for (int p = 0; p < k; ++p) {
      const double* brow = b + static_cast<long>(p) * m + j;
      const __m256d b0 = _mm256_loadu_pd(brow);
      const __m256d b1 = _mm256_loadu_pd(brow + 4);
      const __m256d b2 = _mm256_loadu_pd(brow + 8);
      for (int r = 0; r < R; ++r) {
        const __m256d s = _mm256_broadcast_sd(a + static_cast<long>(r) * k + p);
        acc[r][0] = _mm256_fmadd_pd(s, b0, acc[r][0]);
        acc[r][1] = _mm256_fmadd_pd(s, b1, acc[r][1]);
        acc[r][2] = _mm256_fmadd_pd(s, b2, acc[r][2]);
      }
    }
    for (int r = 0; r < R; ++r)
      for (int v = 0; v < 3; ++v) _mm256_storeu_pd(c + static_cast<long>(r) * m + j + 4 * v, acc[r][v]);
  }
  for (; j + 4 <= m; j += 4) {
    __m256d acc[R];
    for (int r = 0; r < R; ++r) acc[r] = _mm256_loadu_pd(c + static_cast<long>(r) * m + j);
    for (int p = 0; p < k; ++p) {
      const __m256d bv = _mm256_loadu_pd(b + static_cast<long>(p) * m + j);
      for (int r = 0; r < R; ++r)
        acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + static_cast<long>(r) * k + p), bv, acc[r]);
    }
    for (int r = 0; r < R; ++r) _mm256_storeu_pd(c + static_cast<long>(r) * m + j, acc[r]);
  }
  for (; j < m; ++j) {
    for (int r = 0; r < R; ++r) {
      double s = c[static_cast<long>(r) * m + j];
      for (int p = 0; p < k; ++p) s = std::fma(a[static_cast<long>(r) * k + p], b[static_cast<long>(p) * m + j], s);
      c[static_cast<long>(r) * m + j] = s;
    }
  }
}

void GemmNN(int n, int k, int m, const double* a, const double* b, double* c) {
  int i = 0;
  for (; i + 4 <= n; i += 4) NNRows<4>(k, m, a + static_cast<long>(i) * k, b, c + static_cast<long>(i) * m);
  for (; i < n; ++i) NNRows<1>(k, m, a + static_cast<long>(i) * k, b, c + static_cast<long>(i) * m);
}

inline double HorizontalSum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);  // (l0+l2, l1+l3)
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Lanes accumulate x[4q+l]*y[4q+l]; tail is folded in sequentially afterwards.
double Dot(int n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = HorizontalSum(acc);
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

// Transposes b once and reuses the register-blocked GemmNN, so each output
// element accumulates sequentially over p starting from its prior value.
void GemmNT(int n, int k, int m, const double* a, const double* b, double* c) {
  thread_local std::vector<double> bt;
  bt.resize(static_cast<std::size_t>(k) * m);
  for (int j = 0; j < m; ++j)
    for (int p = 0; p < k; ++p) bt[static_cast<std::size_t>(p) * m + j] = b[static_cast<long>(j) * k + p];
  GemmNN(n, k, m, a, bt.data(), c);
}

// Per-element order: c = fma(a[i][p], b[i][j], c) for i = 0..n-1.
template <int P>
inline void TNCols(int n, int k, int m, const double* a, const double* b, double* c) {
  int j = 0;
  for (; j + 12 <= m; j += 12) {
    __m256d acc[P][3];
    for (int q = 0; q < P; ++q)
      for (int v = 0; v < 3; ++v) acc[q][v] = _mm256_loadu_pd(c + static_cast<long>(q) * m + j + 4 * v);
    for (int i = 0; i < n; ++i) {
      const double* brow = b + static_cast<long>(i) * m + j;
      const __m256d b0 = _mm256_loadu_pd(brow);
      const __m256d b1 = _mm256_loadu_pd(brow + 4);
      const __m256d b2 = _mm256_loadu_pd(brow + 8);
      for (int q = 0; q < P; ++q) {
        const __m256d s = _mm256_broadcast_sd(a + static_cast<long>(i) * k + q);
        acc[q][0] = _mm256_fmadd_pd(s, b0, acc[q][0]);
        acc[q][1] = _mm256_fmadd_pd(s, b1, acc[q][1]);
        acc[q][2] = _mm256_fmadd_pd(s, b2, acc[q][2]);
      }
    }
    for (int q = 0; q < P; ++q)
      for (int v = 0; v < 3; ++v) _mm256_storeu_pd(c + static_cast<long>(q) * m + j + 4 * v, acc[q][v]);
  }
  for (; j + 4 <= m; j += 4) {
    __m256d acc[P];
    for (int q = 0; q < P; ++q) acc[q] = _mm256_loadu_pd(c + static_cast<long>(q) * m + j);
    for (int i = 0; i < n; ++i) {
      const __m256d bv = _mm256_loadu_pd(b + static_cast<long>(i) * m + j);
      for (int q = 0; q < P; ++q)
        acc[q] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + static_cast<long>(i) * k + q), bv, acc[q]);
    }
    for (int q = 0; q < P; ++q) _mm256_storeu_pd(c + static_cast<long>(q) * m + j, acc[q]);
  }
  for (; j < m; ++j) {
    for (int q = 0; q < P; ++q) {
      double s = c[static_cast<long>(q) * m + j];
      for (int i = 0; i < n; ++i) s = std::fma(a[static_cast<long>(i) * k + q], b[static_cast<long>(i) * m + j], s);
      c[static_cast<long>(q) * m + j] = s;
    }
  }
}

void GemmTN(int n, int k, int m, const double* a, const double* b, double* c) {
  // Rows are processed in blocks that stay cache resident; each element still
  // accumulates over i in increasing order.
  constexpr int kRowBlock = 128;
  for (int i0 = 0; i0 < n; i0 += kRowBlock) {
    const int rows = std::min(kRowBlock, n - i0);
    const double* ab = a + static_cast<long>(i0) * k;
    const double* bb = b + static_cast<long>(i0) * m;
    int p = 0;
    for (; p + 4 <= k; p += 4) TNCols<4>(rows, k, m, ab + p, bb, c + static_cast<long>(p) * m);
    for (; p < k; ++p) TNCols<1>(rows, k, m, ab + p, bb, c + static_cast<long>(p) * m);
  }
}

void Axpy(int n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void Add(int n, const double* x, double* y) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += x[i];
}

}  // namespace

const KernelTable* CompiledAvx2Kernels() {
  static const KernelTable table{"avx2", GemmNN, GemmNT, GemmTN, Dot, Axpy, Add};
  return &table;
}

}  // namespace dgin::simd

#else

namespace dgin::simd {
const KernelTable* CompiledAvx2Kernels() { return nullptr; }
}  // namespace dgin::simd

#endif
