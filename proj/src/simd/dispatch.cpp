#include <atomic>
#include <cstdlib>
#include <string_view>

#include "msnet/simd.hpp"

namespace msnet::simd {

#ifndef MSNET_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif
#ifndef MSNET_HAVE_NEON
const KernelTable* neon_kernels() { return nullptr; }
#endif

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(MSNET_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#ifdef MSNET_HAVE_NEON
      return true;
#else
      return false;
#endif
  }
  return false;
}

namespace {

const KernelTable* table_for(Isa isa) {
  if (!cpu_supports(isa)) return nullptr;
  switch (isa) {
    case Isa::Scalar:
      return &scalar_kernels();
    case Isa::Avx2:
      return avx2_kernels();
    case Isa::Neon:
      return neon_kernels();
  }
  return nullptr;
}

const KernelTable* initial_choice() {
  if (const char* env = std::getenv("MSNET_SIMD"); env && std::string_view(env) == "scalar") {
    return &scalar_kernels();
  }
  if (const auto* t = table_for(Isa::Avx2)) return t;
  if (const auto* t = table_for(Isa::Neon)) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_choice()};
  return table;
}

}  // namespace

const KernelTable& active_kernels() { return *current().load(std::memory_order_relaxed); }

bool select(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (!t) return false;
  current().store(t, std::memory_order_relaxed);
  return true;
}

}  // namespace msnet::simd
