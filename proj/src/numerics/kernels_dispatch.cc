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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.h"

namespace dgin::simd {
namespace {

bool CpuHasAvx2Fma() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* Select() {
  const char* env = std::getenv("DGIN_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return &ScalarKernels();
  if (const KernelTable* avx2 = Avx2Kernels()) return avx2;
  return &ScalarKernels();
}

std::atomic<const KernelTable*>& Slot() {
  static std::atomic<const KernelTable*> slot{Select()};
  return slot;
}

}  // namespace

const KernelTable* Avx2Kernels() {
  static const KernelTable* table = CpuHasAvx2Fma() ? CompiledAvx2Kernels() : nullptr;
  return table;
}

const KernelTable& Active() { return *Slot().load(std::memory_order_relaxed); }

void SetActive(const KernelTable& table) { Slot().store(&table, std::memory_order_relaxed); }

}  // namespace dgin::simd
