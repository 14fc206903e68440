#pragma once

#include <cstddef>

namespace paravec::simd {

namespace scalar {
double dot_f32_f64(const float* x, const double* y, std::size_t n);
double dot_f64_f64(const double* x, const double* y, std::size_t n);
double dot_f32_f32(const float* x, const float* y, std::size_t n);
void axpy_f32_to_f64(double a, const float* x, double* y, std::size_t n);
void axpy_f64_to_f64(double a, const double* x, double* y, std::size_t n);
void axpy_f64_to_f32(double a, const double* x, float* y, std::size_t n);
}  // namespace scalar

#ifdef PARAVEC_HAVE_AVX2
namespace avx2 {
double dot_f32_f64(const float* x, const double* y, std::size_t n);
double dot_f64_f64(const double* x, const double* y, std::size_t n);
double dot_f32_f32(const float* x, const float* y, std::size_t n);
void axpy_f32_to_f64(double a, const float* x, double* y, std::size_t n);
void axpy_f64_to_f64(double a, const double* x, double* y, std::size_t n);
void axpy_f64_to_f32(double a, const double* x, float* y, std::size_t n);
}  // namespace avx2
#endif

}  // namespace paravec::simd
