#include "msnet/simd.hpp"

namespace msnet::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void rank1_scalar(double* g, const double* x, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) {
    const double xi = x[i];
    double* row = g + i * d;
    for (std::size_t j = 0; j < d; ++j) row[j] += xi * x[j];
  }
}

const KernelTable kScalar{dot_scalar, axpy_scalar, rank1_scalar, "scalar"};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace msnet::simd
