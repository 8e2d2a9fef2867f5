#include <cstdlib>
#include <cstring>

#include "rog/simd/kernels.hpp"

namespace rog::simd {

#ifndef ROG_HAVE_AVX2
namespace avx2 {
const KernelSet* kernels() { return nullptr; }
}  // namespace avx2
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelSet* detect() {
  const char* env = std::getenv("ROG_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return &scalar::kernels();
  if (avx2::kernels() != nullptr && cpu_has_avx2()) return avx2::kernels();
  return &scalar::kernels();
}

const KernelSet*& current() {
  static const KernelSet* k = detect();
  return k;
}

}  // namespace

const KernelSet& active() { return *current(); }

bool select(const char* name) {
  if (std::strcmp(name, "scalar") == 0) {
    current() = &scalar::kernels();
    return true;
  }
  if (std::strcmp(name, "avx2") == 0 && avx2::kernels() != nullptr && cpu_has_avx2()) {
    current() = avx2::kernels();
    return true;
  }
  return false;
}

}  // namespace rog::simd
