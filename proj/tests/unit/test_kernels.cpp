#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rog/model/network.hpp"
#include "rog/simd/kernels.hpp"

using namespace rog;

namespace {

std::vector<float> random_vec(std::size_t n, std::mt19937& rng, float scale = 1.0f) {
  std::uniform_real_distribution<float> u(-scale, scale);
  std::vector<float> v(n);
  for (float& x : v) x = u(rng);
  return v;
}

double max_rel_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(double(a[i]) - b[i]) / std::max(1.0, std::abs(double(a[i])));
    worst = std::max(worst, d);
  }
  return worst;
}

const simd::KernelSet* vector_set() { return simd::cpu_has_avx2() ? simd::avx2::kernels() : nullptr; }

}  // namespace

TEST_CASE("scalar kernels reproduce naive definitions") {
  const auto& k = simd::scalar::kernels();
  std::mt19937 rng(1);
  const int m = 3, n = 5, p = 4;
  auto a = random_vec(m * p, rng), b = random_vec(p * n, rng);
  std::vector<float> c(m * n, 0.0f);
  k.gemm(m, n, p, a.data(), p, 1, b.data(), n, c.data(), n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int q = 0; q < p; ++q) s += double(a[i * p + q]) * b[q * n + j];
      CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-5));
    }
  std::vector<float> y(7);
  std::vector<float> x = random_vec(7, rng, 5.0f);
  k.swish(7, x.data(), y.data());
  for (int i = 0; i < 7; ++i) CHECK(y[i] == doctest::Approx(x[i] / (1.0 + std::exp(-x[i]))).epsilon(1e-5));
}

TEST_CASE("vector kernels match the scalar reference") {
  const simd::KernelSet* v = vector_set();
  if (!v) {
    MESSAGE("AVX2 variant unavailable on this machine; equivalence not exercised");
    return;
  }
  const auto& s = simd::scalar::kernels();
  std::mt19937 rng(7);

  SUBCASE("gemm, both stride layouts and ragged edges") {
    for (int m : {1, 3, 4, 9})
      for (int n : {1, 7, 16, 37})
        for (int k : {1, 5, 27}) {
          auto a = random_vec(std::size_t(m) * k, rng), b = random_vec(std::size_t(k) * n, rng);
          auto c0 = random_vec(std::size_t(m) * n, rng);
          auto c1 = c0;
          s.gemm(m, n, k, a.data(), k, 1, b.data(), n, c0.data(), n);
          v->gemm(m, n, k, a.data(), k, 1, b.data(), n, c1.data(), n);
          CHECK(max_rel_diff(c0, c1) < 1e-5);
          auto d0 = random_vec(std::size_t(m) * n, rng);
          auto d1 = d0;
          s.gemm(m, n, k, a.data(), 1, m, b.data(), n, d0.data(), n);
          v->gemm(m, n, k, a.data(), 1, m, b.data(), n, d1.data(), n);
          CHECK(max_rel_diff(d0, d1) < 1e-5);
        }
  }
  SUBCASE("gemm_nt") {
    for (int m : {1, 2, 5})
      for (int n : {1, 3, 8})
        for (int k : {1, 9, 64, 100}) {
          auto a = random_vec(std::size_t(m) * k, rng), b = random_vec(std::size_t(n) * k, rng);
          std::vector<float> c0(std::size_t(m) * n, 0.5f), c1 = c0;
          s.gemm_nt(m, n, k, a.data(), k, b.data(), k, c0.data(), n);
          v->gemm_nt(m, n, k, a.data(), k, b.data(), k, c1.data(), n);
          CHECK(max_rel_diff(c0, c1) < 1e-5);
        }
  }
  SUBCASE("elementwise kernels") {
    for (std::size_t n : {1u, 7u, 8u, 9u, 31u, 1000u}) {
      auto x = random_vec(n, rng, 12.0f), y0 = random_vec(n, rng), y1 = y0, gy = random_vec(n, rng);
      s.axpy(n, 0.3f, x.data(), y0.data());
      v->axpy(n, 0.3f, x.data(), y1.data());
      CHECK(max_rel_diff(y0, y1) < 1e-6);
      CHECK(s.dot(n, x.data(), gy.data()) == doctest::Approx(v->dot(n, x.data(), gy.data())).epsilon(1e-5));
      double s0, q0, s1, q1;
      s.moments(n, x.data(), &s0, &q0);
      v->moments(n, x.data(), &s1, &q1);
      CHECK(s0 == doctest::Approx(s1).epsilon(1e-12));
      CHECK(q0 == doctest::Approx(q1).epsilon(1e-12));
      std::vector<float> z0(n), z1(n);
      s.scale_shift(n, 1.7f, -0.2f, x.data(), z0.data());
      v->scale_shift(n, 1.7f, -0.2f, x.data(), z1.data());
      CHECK(max_rel_diff(z0, z1) < 1e-6);
      s.swish(n, x.data(), z0.data());
      v->swish(n, x.data(), z1.data());
      CHECK(max_rel_diff(z0, z1) < 1e-5);
      s.swish_grad(n, x.data(), gy.data(), z0.data());
      v->swish_grad(n, x.data(), gy.data(), z1.data());
      CHECK(max_rel_diff(z0, z1) < 1e-5);
    }
  }
  SUBCASE("extreme swish inputs stay finite") {
    std::vector<float> x{-1000.f, -100.f, -88.f, 0.f, 88.f, 100.f, 1000.f, -0.0f};
    std::vector<float> y(x.size()), g(x.size()), one(x.size(), 1.0f);
    v->swish(x.size(), x.data(), y.data());
    v->swish_grad(x.size(), x.data(), one.data(), g.data());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::isfinite(y[i]));
      CHECK(std::isfinite(g[i]));
    }
  }
}

TEST_CASE("network output agrees across kernel variants") {
  if (!vector_set()) return;
  auto cfg = model::make_config(1, 3, {32, 32, 32}, {2, 2, 2}, 8);
  model::RogNet net(cfg);
  Tensor x(1, {32, 32, 32});
  std::mt19937 rng(3);
  std::normal_distribution<float> nd;
  for (float& v : x.values()) v = nd(rng);
  REQUIRE(simd::select("scalar"));
  const Tensor a = net.forward(x);
  REQUIRE(simd::select("avx2"));
  const Tensor b = net.forward(x);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, double(std::abs(a[i] - b[i])));
  CHECK(worst < 1e-3);
  CHECK(std::string(simd::active().name) == "avx2");
}

TEST_CASE("select rejects unknown variants") {
  CHECK_FALSE(simd::select("neon-nonexistent"));
  CHECK(simd::select("scalar"));
  CHECK(std::string(simd::active().name) == "scalar");
}
