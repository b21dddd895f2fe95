#pragma once

#include <cstddef>
#include <string_view>

namespace msnet::simd {

// Inner-loop kernels used for Gram accumulation and residual updates.
// Every variant computes the same quantity; vector variants may differ from
// the scalar reference only by floating-point reassociation.
struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // g (d x d, row-major) += x x'
  void (*rank1_update)(double* g, const double* x, std::size_t d);
  const char* name;
};

enum class Isa { Scalar, Avx2, Neon };

const KernelTable& scalar_kernels();
// nullptr when the ISA was not compiled in.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

bool cpu_supports(Isa isa);

// Kernels selected once per process: the widest ISA the CPU supports, unless
// MSNET_SIMD=scalar is set in the environment.
const KernelTable& active_kernels();

// Overrides the process-wide choice (tests, benchmarks). Returns false when
// the requested ISA is unavailable and leaves the selection unchanged.
bool select(Isa isa);

inline double dot(const double* a, const double* b, std::size_t n) {
  return active_kernels().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active_kernels().axpy(alpha, x, y, n);
}
inline void rank1_update(double* g, const double* x, std::size_t d) {
  active_kernels().rank1_update(g, x, d);
}

}  // namespace msnet::simd
