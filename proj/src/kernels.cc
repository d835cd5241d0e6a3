// Copyright 2026 The mrcqt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mrcqt/kernels.h"

#include <atomic>
#include <cstdlib>
#include <string>

#include "mrcqt/error.h"

namespace mrcqt::kernels {
namespace {

bool CpuHasAvx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* TableFor(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &ScalarKernels();
    case Isa::kAvx2:
      return CpuHasAvx2() ? Avx2Kernels() : nullptr;
    case Isa::kNeon:
      return NeonKernels();
  }
  return nullptr;
}

const KernelTable* DefaultTable() {
  if (const char* env = std::getenv("MRCQT_ISA")) {
    const std::string name(env);
    for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
      if (name == IsaName(isa)) {
        if (const KernelTable* table = TableFor(isa)) return table;
      }
    }
  }
  if (const KernelTable* table = TableFor(Isa::kAvx2)) return table;
  if (const KernelTable* table = TableFor(Isa::kNeon)) return table;
  return &ScalarKernels();
}

std::atomic<const KernelTable*>& ActiveSlot() {
  static std::atomic<const KernelTable*> slot{DefaultTable()};
  return slot;
}

}  // namespace

bool IsaSupported(Isa isa) { return TableFor(isa) != nullptr; }

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

const KernelTable& Active() {
  return *ActiveSlot().load(std::memory_order_acquire);
}

Isa ActiveIsa() { return Active().isa; }

void SetActiveIsa(Isa isa) {
  const KernelTable* table = TableFor(isa);
  if (table == nullptr) {
    throw ParameterError("kernels: ISA '" + std::string(IsaName(isa)) +
                         "' is not available on this machine");
  }
  ActiveSlot().store(table, std::memory_order_release);
}

}  // namespace mrcqt::kernels
