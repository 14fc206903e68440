#include <immintrin.h>

#include "kernels_impl.hpp"

// Built with -mavx2 -mfma. Never call into this TU without checking CPUID
// first (see dispatch.cpp).

namespace paravec::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double dot_f32_f64(const float* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 xf = _mm256_loadu_ps(x + i);
    __m256d x0 = _mm256_cvtps_pd(_mm256_castps256_ps128(xf));
    __m256d x1 = _mm256_cvtps_pd(_mm256_extractf128_ps(xf, 1));
    acc0 = _mm256_fmadd_pd(x0, _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(x1, _mm256_loadu_pd(y + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += static_cast<double>(x[i]) * y[i];
  return s;
}

double dot_f64_f64(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double dot_f32_f32(const float* x, const float* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 xf = _mm256_loadu_ps(x + i);
    __m256 yf = _mm256_loadu_ps(y + i);
    acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(xf)),
                           _mm256_cvtps_pd(_mm256_castps256_ps128(yf)), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(xf, 1)),
                           _mm256_cvtps_pd(_mm256_extractf128_ps(yf, 1)), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  return s;
}

// The axpy kernels use separate mul and add (no FMA) so each lane rounds
// exactly like the scalar reference.

void axpy_f32_to_f64(double a, const float* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(yv, _mm256_mul_pd(va, xv)));
  }
  for (; i < n; ++i) y[i] += a * static_cast<double>(x[i]);
}

void axpy_f64_to_f64(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(yv, _mm256_mul_pd(va, xv)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_f64_to_f32(double a, const double* x, float* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_cvtps_pd(_mm_loadu_ps(y + i));
    __m256d xv = _mm256_loadu_pd(x + i);
    _mm_storeu_ps(y + i, _mm256_cvtpd_ps(_mm256_add_pd(yv, _mm256_mul_pd(va, xv))));
  }
  for (; i < n; ++i) y[i] = static_cast<float>(static_cast<double>(y[i]) + a * x[i]);
}

}  // namespace paravec::simd::avx2
