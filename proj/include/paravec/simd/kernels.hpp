#pragma once

// Inner-loop arithmetic used by training, inference and similarity search.
//
// Parameters are stored as float (or double in the gradient-check harness);
// hidden states, gradients and every reduction are carried in double. Each
// kernel has a portable scalar reference and, on x86-64, an AVX2 variant.
// The variant is picked once at startup from CPUID and can be overridden
// with PARAVEC_SIMD=scalar|avx2 or set_backend().
//
// Element-wise kernels (axpy_*) produce bit-identical results on every
// backend. Reductions (dot*) differ only in summation order.

#include <cstddef>
#include <span>

namespace paravec::simd {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  Backend backend;
  // sum_i x[i] * y[i], accumulated in double
  double (*dot_f32_f64)(const float* x, const double* y, std::size_t n);
  double (*dot_f64_f64)(const double* x, const double* y, std::size_t n);
  double (*dot_f32_f32)(const float* x, const float* y, std::size_t n);
  // y[i] += a * x[i] into a double accumulator
  void (*axpy_f32_to_f64)(double a, const float* x, double* y, std::size_t n);
  void (*axpy_f64_to_f64)(double a, const double* x, double* y, std::size_t n);
  // y[i] = round(y[i] + a * x[i]) into stored parameters
  void (*axpy_f64_to_f32)(double a, const double* x, float* y, std::size_t n);
};

const KernelTable& scalar_kernels();
/// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

const KernelTable& active();
Backend active_backend();
/// Returns false (and leaves the selection alone) if the backend is unavailable.
bool set_backend(Backend backend);
const char* to_string(Backend backend);

// Typed front-ends over the active table.

inline double dot(std::span<const float> x, std::span<const double> y) {
  return active().dot_f32_f64(x.data(), y.data(), x.size());
}
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot_f64_f64(x.data(), y.data(), x.size());
}
inline double dot(std::span<const float> x, std::span<const float> y) {
  return active().dot_f32_f32(x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const float> x, std::span<double> y) {
  active().axpy_f32_to_f64(a, x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy_f64_to_f64(a, x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<float> y) {
  active().axpy_f64_to_f32(a, x.data(), y.data(), x.size());
}

}  // namespace paravec::simd
