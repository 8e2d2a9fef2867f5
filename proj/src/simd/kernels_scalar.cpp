#include <cmath>

#include "rog/simd/kernels.hpp"

namespace rog::simd::scalar {
namespace {

void gemm(int m, int n, int k, const float* a, std::ptrdiff_t a_row, std::ptrdiff_t a_col,
          const float* b, std::ptrdiff_t ldb, float* c, std::ptrdiff_t ldc) {
  for (int i = 0; i < m; ++i) {
    float* crow = c + i * ldc;
    for (int p = 0; p < k; ++p) {
      const float av = a[i * a_row + p * a_col];
      if (av == 0.0f) continue;
      const float* brow = b + p * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(int m, int n, int k, const float* a, std::ptrdiff_t lda, const float* b,
             std::ptrdiff_t ldb, float* c, std::ptrdiff_t ldc) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      float s = 0.0f;
      const float* ar = a + i * lda;
      const float* br = b + j * ldb;
      for (int p = 0; p < k; ++p) s += ar[p] * br[p];
      c[i * ldc + j] += s;
    }
  }
}

void axpy(std::size_t n, float alpha, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

float dot(std::size_t n, const float* x, const float* y) {
  float s = 0.0f;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void moments(std::size_t n, const float* x, double* sum, double* sumsq) {
  double s = 0.0, q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    s += v;
    q += v * v;
  }
  *sum = s;
  *sumsq = q;
}

void scale_shift(std::size_t n, float a, float b, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b;
}

inline float sigmoid(float v) {
  v = std::fmax(-88.0f, std::fmin(88.0f, v));
  return 1.0f / (1.0f + std::exp(-v));
}

void swish(std::size_t n, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * sigmoid(x[i]);
}

void swish_grad(std::size_t n, const float* x, const float* gy, float* gx) {
  for (std::size_t i = 0; i < n; ++i) {
    const float s = sigmoid(x[i]);
    gx[i] = gy[i] * (s + x[i] * s * (1.0f - s));
  }
}

const KernelSet kTable{"scalar", gemm, gemm_nt, axpy, dot, moments, scale_shift, swish, swish_grad};

}  // namespace

const KernelSet& kernels() { return kTable; }

}  // namespace rog::simd::scalar
