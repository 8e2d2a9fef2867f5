#pragma once

// Data-parallel inner loops used by the network layers. Every kernel has a
// scalar reference in namespace scalar; an AVX2/FMA variant is compiled
// separately and chosen at runtime when the CPU supports it. The variants
// are interchangeable up to floating-point reassociation.

#include <cstddef>

namespace rog::simd {

struct KernelSet {
  const char* name;

  // C[i][j] += sum_p A(i, p) * B[p][j], where A(i, p) = a[i*a_row + p*a_col].
  // Covers both A*B and A^T*B (swap the strides).
  void (*gemm)(int m, int n, int k, const float* a, std::ptrdiff_t a_row, std::ptrdiff_t a_col,
               const float* b, std::ptrdiff_t ldb, float* c, std::ptrdiff_t ldc);

  // C[i][j] += sum_p A[i][p] * B[j][p]   (A * B^T, reduction over contiguous p)
  void (*gemm_nt)(int m, int n, int k, const float* a, std::ptrdiff_t lda, const float* b,
                  std::ptrdiff_t ldb, float* c, std::ptrdiff_t ldc);

  // y += alpha * x
  void (*axpy)(std::size_t n, float alpha, const float* x, float* y);

  float (*dot)(std::size_t n, const float* x, const float* y);

  // Sum and sum of squares accumulated in double.
  void (*moments)(std::size_t n, const float* x, double* sum, double* sumsq);

  // y = a * x + b
  void (*scale_shift)(std::size_t n, float a, float b, const float* x, float* y);

  // y = x * sigmoid(x)
  void (*swish)(std::size_t n, const float* x, float* y);

  // gx = gy * d/dx [x * sigmoid(x)]
  void (*swish_grad)(std::size_t n, const float* x, const float* gy, float* gx);
};

namespace scalar {
const KernelSet& kernels();
}

namespace avx2 {
// nullptr when the variant was not compiled in.
const KernelSet* kernels();
}

bool cpu_has_avx2();

// Process-wide selection. ROG_SIMD=scalar|avx2 overrides auto-detection.
const KernelSet& active();

// Forces a specific variant (tests, benchmarking). Returns false if the
// requested variant is unavailable.
bool select(const char* name);

}  // namespace rog::simd
