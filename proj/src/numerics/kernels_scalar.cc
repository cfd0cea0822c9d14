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

// Reference kernels. Built with -ffp-contract=off so that the compiler does
// not fuse multiply-adds behind our back.

#include "kernels_internal.h"

namespace dgin::simd {
namespace {

void GemmNN(int n, int k, int m, const double* a, const double* b, double* c) {
  for (int i = 0; i < n; ++i) {
    const double* arow = a + static_cast<long>(i) * k;
    double* crow = c + static_cast<long>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double s = arow[p];
      const double* brow = b + static_cast<long>(p) * m;
      for (int j = 0; j < m; ++j) crow[j] += s * brow[j];
    }
  }
}

double Dot(int n, const double* x, const double* y) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void GemmNT(int n, int k, int m, const double* a, const double* b, double* c) {
  for (int i = 0; i < n; ++i) {
    const double* arow = a + static_cast<long>(i) * k;
    double* crow = c + static_cast<long>(i) * m;
    for (int j = 0; j < m; ++j) crow[j] += Dot(k, arow, b + static_cast<long>(j) * k);
  }
}

void GemmTN(int n, int k, int m, const double* a, const double* b, double* c) {
  for (int i = 0; i < n; ++i) {
    const double* arow = a + static_cast<long>(i) * k;
    const double* brow = b + static_cast<long>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double s = arow[p];
      if (s == 0.0) continue;
      double* crow = c + static_cast<long>(p) * m;
      for (int j = 0; j < m; ++j) crow[j] += s * brow[j];
    }
  }
}

void Axpy(int n, double alpha, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void Add(int n, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += x[i];
}

}  // namespace

const KernelTable& ScalarKernels() {
  static const KernelTable table{"scalar", GemmNN, GemmNT, GemmTN, Dot, Axpy, Add};
  return table;
}

}  // namespace dgin::simd
