#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kernels_impl.hpp"
#include "paravec/simd/kernels.hpp"

namespace paravec::simd {

namespace {

const KernelTable kScalarTable{
    Backend::kScalar,        scalar::dot_f32_f64,     scalar::dot_f64_f64,
    scalar::dot_f32_f32,     scalar::axpy_f32_to_f64, scalar::axpy_f64_to_f64,
    scalar::axpy_f64_to_f32,
};

#ifdef PARAVEC_HAVE_AVX2
const KernelTable kAvx2Table{
    Backend::kAvx2,        avx2::dot_f32_f64,     avx2::dot_f64_f64,
    avx2::dot_f32_f32,     avx2::axpy_f32_to_f64, avx2::axpy_f64_to_f64,
    avx2::axpy_f64_to_f32,
};
#endif

bool cpu_has_avx2() {
#if defined(PARAVEC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const KernelTable* best = avx2_kernels();
  if (const char* env = std::getenv("PARAVEC_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return &kScalarTable;
  }
  return best != nullptr ? best : &kScalarTable;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& scalar_kernels() { return kScalarTable; }

const KernelTable* avx2_kernels() {
#ifdef PARAVEC_HAVE_AVX2
  static const bool available = cpu_has_avx2();
  return available ? &kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

Backend active_backend() { return active().backend; }

bool set_backend(Backend backend) {
  const KernelTable* table = backend == Backend::kScalar ? &kScalarTable : avx2_kernels();
  if (table == nullptr) return false;
  current().store(table, std::memory_order_relaxed);
  return true;
}

const char* to_string(Backend backend) {
  return backend == Backend::kScalar ? "scalar" : "avx2";
}

}  // namespace paravec::simd
