#include "rog/model/layers.hpp"

#include <algorithm>
#include <cmath>

#include "rog/core/error.hpp"
#include "rog/simd/kernels.hpp"

namespace rog::model {

int ParamSet::add(std::string name, std::vector<int> shape, float fill) {
  names_.push_back(std::move(name));
  values_.emplace_back(std::move(shape), fill);
  return static_cast<int>(values_.size()) - 1;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

std::vector<Tensor> ParamSet::zeros_like() const {
  std::vector<Tensor> g;
  g.reserve(values_.size());
  for (const auto& v : values_) g.emplace_back(v.shape());
  return g;
}

Tensor Tape::pop() {
  require(!saved_.empty(), ErrorKind::kInvalidArgument, "tape underflow: backward does not mirror forward");
  Tensor t = std::move(saved_.back());
  saved_.pop_back();
  return t;
}

namespace {

void he_init(Tensor& w, int fan_in, std::mt19937_64& rng) {
  std::normal_distribution<float> d(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
  for (auto& v : w.values()) v = d(rng);
}

}  // namespace

// --- Conv3d -----------------------------------------------------------------

Conv3d::Conv3d(ParamSet& ps, const std::string& name, int in, int out, int kernel, Index3 stride, bool bias,
               std::mt19937_64& rng)
    : in_(in), out_(out), k_(kernel), stride_(stride) {
  require(kernel == 1 || kernel == 3, ErrorKind::kInvalidConfig, "convolution kernel must be 1 or 3");
  weight_ = ps.add(name + ".weight", {out, in, kernel, kernel, kernel});
  he_init(ps.value(weight_), in * kernel * kernel * kernel, rng);
  if (bias) bias_ = ps.add(name + ".bias", {out});
}

Index3 Conv3d::output_shape(const Index3& in) const {
  Index3 o{};
  for (std::size_t a = 0; a < 3; ++a) o[a] = (in[a] - 1) / stride_[a] + 1;
  return o;
}

void Conv3d::im2col(const Tensor& x, const Index3& os, std::vector<float>& cols) const {
  const Index3 is = x.spatial();
  const int pad = k_ / 2;
  const std::size_t n = voxel_count(os);
  cols.assign(static_cast<std::size_t>(in_) * k_ * k_ * k_ * n, 0.0f);
  std::size_t row = 0;
  for (int c = 0; c < in_; ++c) {
    const float* src = x.channel(c);
    for (int kz = 0; kz < k_; ++kz)
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx, ++row) {
          float* dst = cols.data() + row * n;
          for (int oz = 0; oz < os[0]; ++oz) {
            const int iz = oz * stride_[0] + kz - pad;
            if (iz < 0 || iz >= is[0]) continue;
            for (int oy = 0; oy < os[1]; ++oy) {
              const int iy = oy * stride_[1] + ky - pad;
              if (iy < 0 || iy >= is[1]) continue;
              const float* srow = src + (static_cast<std::size_t>(iz) * is[1] + iy) * is[2];
              float* drow = dst + (static_cast<std::size_t>(oz) * os[1] + oy) * os[2];
              for (int ox = 0; ox < os[2]; ++ox) {
                const int ix = ox * stride_[2] + kx - pad;
                if (ix >= 0 && ix < is[2]) drow[ox] = srow[ix];
              }
            }
          }
        }
  }
}

void Conv3d::col2im(const std::vector<float>& cols, const Index3& os, Tensor& gx) const {
  const Index3 is = gx.spatial();
  const int pad = k_ / 2;
  const std::size_t n = voxel_count(os);
  std::size_t row = 0;
  for (int c = 0; c < in_; ++c) {
    float* dst = gx.channel(c);
    for (int kz = 0; kz < k_; ++kz)
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx, ++row) {
          const float* src = cols.data() + row * n;
          for (int oz = 0; oz < os[0]; ++oz) {
            const int iz = oz * stride_[0] + kz - pad;
            if (iz < 0 || iz >= is[0]) continue;
            for (int oy = 0; oy < os[1]; ++oy) {
              const int iy = oy * stride_[1] + ky - pad;
              if (iy < 0 || iy >= is[1]) continue;
              float* drow = dst + (static_cast<std::size_t>(iz) * is[1] + iy) * is[2];
              const float* srow = src + (static_cast<std::size_t>(oz) * os[1] + oy) * os[2];
              for (int ox = 0; ox < os[2]; ++ox) {
                const int ix = ox * stride_[2] + kx - pad;
                if (ix >= 0 && ix < is[2]) drow[ix] += srow[ox];
              }
            }
          }
        }
  }
}

Tensor Conv3d::forward(const ParamSet& ps, const Tensor& x, Tape* tape) const {
  require(x.rank() == 4 && x.channels() == in_, ErrorKind::kInvalidArgument, "conv input channel mismatch");
  const auto& k = simd::active();
  const Index3 os = output_shape(x.spatial());
  const std::size_t n = voxel_count(os);
  const int kk = in_ * k_ * k_ * k_;
  Tensor y(out_, os);
  if (bias_ >= 0) {
    const Tensor& b = ps.value(bias_);
    for (int c = 0; c < out_; ++c) std::fill(y.channel(c), y.channel(c) + n, b[static_cast<std::size_t>(c)]);
  }
  const float* w = ps.value(weight_).data();
  if (is_pointwise_identity_layout()) {
    k.gemm(out_, static_cast<int>(n), kk, w, kk, 1, x.data(), static_cast<std::ptrdiff_t>(n), y.data(),
           static_cast<std::ptrdiff_t>(n));
  } else {
    std::vector<float> cols;
    im2col(x, os, cols);
    k.gemm(out_, static_cast<int>(n), kk, w, kk, 1, cols.data(), static_cast<std::ptrdiff_t>(n), y.data(),
           static_cast<std::ptrdiff_t>(n));
  }
  if (tape) tape->push(x);
  return y;
}

Tensor Conv3d::backward(const ParamSet& ps, const Tensor& gy, Tape& tape, Grads* grads,
                        bool need_input_grad) const {
  const Tensor x = tape.pop();
  const auto& k = simd::active();
  const Index3 os = gy.spatial();
  const auto n = static_cast<std::ptrdiff_t>(voxel_count(os));
  const int kk = in_ * k_ * k_ * k_;
  const bool direct = is_pointwise_identity_layout();

  std::vector<float> cols;
  if (grads != nullptr) {
    const float* colp = x.data();
    if (!direct) {
      im2col(x, os, cols);
      colp = cols.data();
    }
    Tensor& gw = (*grads)[static_cast<std::size_t>(weight_)];
    k.gemm_nt(out_, kk, static_cast<int>(n), gy.data(), n, colp, n, gw.data(), kk);
    if (bias_ >= 0) {
      Tensor& gb = (*grads)[static_cast<std::size_t>(bias_)];
      for (int c = 0; c < out_; ++c) {
        double s = 0.0, q = 0.0;
        k.moments(static_cast<std::size_t>(n), gy.channel(c), &s, &q);
        gb[static_cast<std::size_t>(c)] += static_cast<float>(s);
      }
    }
  }
  if (!need_input_grad) return {};

  const float* w = ps.value(weight_).data();
  Tensor gx(in_, x.spatial());
  if (direct) {
    k.gemm(kk, static_cast<int>(n), out_, w, 1, kk, gy.data(), n, gx.data(), n);
  } else {
    std::vector<float> gcols(static_cast<std::size_t>(kk) * static_cast<std::size_t>(n), 0.0f);
    k.gemm(kk, static_cast<int>(n), out_, w, 1, kk, gy.data(), n, gcols.data(), n);
    col2im(gcols, os, gx);
  }
  return gx;
}

// --- DepthwiseConv3d --------------------------------------------------------

DepthwiseConv3d::DepthwiseConv3d(ParamSet& ps, const std::string& name, int channels, std::mt19937_64& rng)
    : channels_(channels) {
  weight_ = ps.add(name + ".weight", {channels, 1, 3, 3, 3});
  he_init(ps.value(weight_), 27, rng);
}

namespace {

struct Span1 {
  int lo, hi;  // output range [lo, hi) for which the tap stays inside
};

inline Span1 tap_range(int n, int k) { return {std::max(0, 1 - k), std::min(n, n + 1 - k)}; }

}  // namespace

Tensor DepthwiseConv3d::forward(const ParamSet& ps, const Tensor& x, Tape* tape) const {
  require(x.rank() == 4 && x.channels() == channels_, ErrorKind::kInvalidArgument, "depthwise channel mismatch");
  const auto& k = simd::active();
  const Index3 s = x.spatial();
  Tensor y(channels_, s);
  const float* w = ps.value(weight_).data();
  for (int c = 0; c < channels_; ++c) {
    const float* src = x.channel(c);
    float* dst = y.channel(c);
    for (int kz = 0; kz < 3; ++kz) {
      const Span1 rz = tap_range(s[0], kz);
      for (int ky = 0; ky < 3; ++ky) {
        const Span1 ry = tap_range(s[1], ky);
        for (int kx = 0; kx < 3; ++kx) {
          const Span1 rx = tap_range(s[2], kx);
          const float wv = w[c * 27 + (kz * 3 + ky) * 3 + kx];
          const auto len = static_cast<std::size_t>(rx.hi - rx.lo);
          for (int z = rz.lo; z < rz.hi; ++z)
            for (int yy = ry.lo; yy < ry.hi; ++yy) {
              const float* in = src + (static_cast<std::size_t>(z + kz - 1) * s[1] + (yy + ky - 1)) * s[2] + rx.lo + kx - 1;
              float* out = dst + (static_cast<std::size_t>(z) * s[1] + yy) * s[2] + rx.lo;
              k.axpy(len, wv, in, out);
            }
        }
      }
    }
  }
  if (tape) tape->push(x);
  return y;
}

Tensor DepthwiseConv3d::backward(const ParamSet& ps, const Tensor& gy, Tape& tape, Grads* grads,
                                 bool need_input_grad) const {
  const Tensor x = tape.pop();
  const auto& k = simd::active();
  const Index3 s = x.spatial();
  Tensor gx;
  if (need_input_grad) gx = Tensor(channels_, s);
  const float* w = ps.value(weight_).data();
  float* gw = grads ? (*grads)[static_cast<std::size_t>(weight_)].data() : nullptr;
  for (int c = 0; c < channels_; ++c) {
    const float* src = x.channel(c);
    const float* g = gy.channel(c);
    float* gdst = need_input_grad ? gx.channel(c) : nullptr;
    for (int kz = 0; kz < 3; ++kz) {
      const Span1 rz = tap_range(s[0], kz);
      for (int ky = 0; ky < 3; ++ky) {
        const Span1 ry = tap_range(s[1], ky);
        for (int kx = 0; kx < 3; ++kx) {
          const Span1 rx = tap_range(s[2], kx);
          const int widx = c * 27 + (kz * 3 + ky) * 3 + kx;
          const float wv = w[widx];
          const auto len = static_cast<std::size_t>(rx.hi - rx.lo);
          float acc = 0.0f;
          for (int z = rz.lo; z < rz.hi; ++z)
            for (int yy = ry.lo; yy < ry.hi; ++yy) {
              const std::size_t in_off =
                  (static_cast<std::size_t>(z + kz - 1) * s[1] + (yy + ky - 1)) * s[2] + rx.lo + kx - 1;
              const std::size_t out_off = (static_cast<std::size_t>(z) * s[1] + yy) * s[2] + rx.lo;
              if (gw) acc += k.dot(len, g + out_off, src + in_off);
              if (gdst) k.axpy(len, wv, g + out_off, gdst + in_off);
            }
          if (gw) gw[widx] += acc;
        }
      }
    }
  }
  return gx;
}

// --- InstanceNorm -----------------------------------------------------------

InstanceNorm::InstanceNorm(ParamSet& ps, const std::string& name, int channels) : channels_(channels) {
  gamma_ = ps.add(name + ".gamma", {channels}, 1.0f);
  beta_ = ps.add(name + ".beta", {channels}, 0.0f);
}

Tensor InstanceNorm::forward(const ParamSet& ps, const Tensor& x, Tape* tape) const {
  require(x.rank() == 4 && x.channels() == channels_, ErrorKind::kInvalidArgument, "norm channel mismatch");
  const auto& k = simd::active();
  const std::size_t n = x.plane();
  Tensor xhat(x.shape());
  Tensor inv(std::vector<int>{channels_});
  Tensor y(x.shape());
  const Tensor& gamma = ps.value(gamma_);
  const Tensor& beta = ps.value(beta_);
  for (int c = 0; c < channels_; ++c) {
    double s = 0.0, q = 0.0;
    k.moments(n, x.channel(c), &s, &q);
    const double mean = s / static_cast<double>(n);
    const double var = std::max(0.0, q / static_cast<double>(n) - mean * mean);
    const double is = 1.0 / std::sqrt(var + kEps);
    inv[static_cast<std::size_t>(c)] = static_cast<float>(is);
    k.scale_shift(n, static_cast<float>(is), static_cast<float>(-mean * is), x.channel(c), xhat.channel(c));
    k.scale_shift(n, gamma[static_cast<std::size_t>(c)], beta[static_cast<std::size_t>(c)], xhat.channel(c),
                  y.channel(c));
  }
  if (tape) {
    tape->push(std::move(xhat));
    tape->push(std::move(inv));
  }
  return y;
}

Tensor InstanceNorm::backward(const ParamSet& ps, const Tensor& gy, Tape& tape, Grads* grads,
                              bool need_input_grad) const {
  const Tensor inv = tape.pop();
  const Tensor xhat = tape.pop();
  const auto& k = simd::active();
  const std::size_t n = gy.plane();
  const Tensor& gamma = ps.value(gamma_);
  Tensor gx;
  if (need_input_grad) gx = Tensor(gy.shape());
  for (int c = 0; c < channels_; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    double sum_g = 0.0, unused = 0.0;
    k.moments(n, gy.channel(c), &sum_g, &unused);
    const double sum_gx = k.dot(n, gy.channel(c), xhat.channel(c));
    if (grads) {
      (*grads)[static_cast<std::size_t>(gamma_)][cc] += static_cast<float>(sum_gx);
      (*grads)[static_cast<std::size_t>(beta_)][cc] += static_cast<float>(sum_g);
    }
    if (need_input_grad) {
      const double a = static_cast<double>(gamma[cc]) * inv[cc];
      const double mean_g = sum_g / static_cast<double>(n);
      const double mean_gx = sum_gx / static_cast<double>(n);
      k.scale_shift(n, static_cast<float>(a), static_cast<float>(-a * mean_g), gy.channel(c), gx.channel(c));
      k.axpy(n, static_cast<float>(-a * mean_gx), xhat.channel(c), gx.channel(c));
    }
  }
  return gx;
}

// --- Swish ------------------------------------------------------------------

Tensor swish_forward(const Tensor& x, Tape* tape) {
  Tensor y(x.shape());
  simd::active().swish(x.size(), x.data(), y.data());
  if (tape) tape->push(x);
  return y;
}

Tensor swish_backward(const Tensor& gy, Tape& tape) {
  const Tensor x = tape.pop();
  Tensor gx(x.shape());
  simd::active().swish_grad(x.size(), x.data(), gy.data(), gx.data());
  return gx;
}

// --- Upsampling -------------------------------------------------------------

namespace {

struct Lerp {
  int i0, i1;
  float w1;
};

std::vector<Lerp> lerp_table(int n, int f) {
  std::vector<Lerp> t(static_cast<std::size_t>(n * f));
  for (int o = 0; o < n * f; ++o) {
    const double c = std::max(0.0, (o + 0.5) / f - 0.5);
    const int i0 = std::min(static_cast<int>(std::floor(c)), n - 1);
    const int i1 = std::min(i0 + 1, n - 1);
    t[static_cast<std::size_t>(o)] = {i0, i1, static_cast<float>(c - i0)};
  }
  return t;
}

// Tensor viewed as (outer, n, inner) resized along the middle axis.
Tensor resize_axis(const Tensor& x, int axis, int f) {
  std::vector<int> shape = x.shape();
  const int n = shape[static_cast<std::size_t>(axis)];
  std::size_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
  for (int a = axis + 1; a < 4; ++a) inner *= static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
  shape[static_cast<std::size_t>(axis)] = n * f;
  Tensor y(shape);
  const auto table = lerp_table(n, f);
  for (std::size_t o = 0; o < outer; ++o) {
    const float* src = x.data() + o * static_cast<std::size_t>(n) * inner;
    float* dst = y.data() + o * static_cast<std::size_t>(n * f) * inner;
    for (std::size_t j = 0; j < table.size(); ++j) {
      const auto& l = table[j];
      const float* a = src + static_cast<std::size_t>(l.i0) * inner;
      const float* b = src + static_cast<std::size_t>(l.i1) * inner;
      float* d = dst + j * inner;
      for (std::size_t i = 0; i < inner; ++i) d[i] = a[i] * (1.0f - l.w1) + b[i] * l.w1;
    }
  }
  return y;
}

Tensor resize_axis_backward(const Tensor& gy, int axis, int f) {
  std::vector<int> shape = gy.shape();
  const int n = shape[static_cast<std::size_t>(axis)] / f;
  std::size_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
  for (int a = axis + 1; a < 4; ++a) inner *= static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
  shape[static_cast<std::size_t>(axis)] = n;
  Tensor gx(shape);
  const auto table = lerp_table(n, f);
  for (std::size_t o = 0; o < outer; ++o) {
    const float* src = gy.data() + o * static_cast<std::size_t>(n * f) * inner;
    float* dst = gx.data() + o * static_cast<std::size_t>(n) * inner;
    for (std::size_t j = 0; j < table.size(); ++j) {
      const auto& l = table[j];
      float* a = dst + static_cast<std::size_t>(l.i0) * inner;
      float* b = dst + static_cast<std::size_t>(l.i1) * inner;
      const float* g = src + j * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        a[i] += g[i] * (1.0f - l.w1);
        b[i] += g[i] * l.w1;
      }
    }
  }
  return gx;
}

}  // namespace

Tensor upsample_forward(const Tensor& x, const Index3& factors) {
  Tensor y = x;
  for (int a = 0; a < 3; ++a)
    if (factors[static_cast<std::size_t>(a)] > 1) y = resize_axis(y, a + 1, factors[static_cast<std::size_t>(a)]);
  return y;
}

Tensor upsample_backward(const Tensor& gy, const Index3& factors, const Index3& in_shape) {
  Tensor g = gy;
  for (int a = 2; a >= 0; --a)
    if (factors[static_cast<std::size_t>(a)] > 1) g = resize_axis_backward(g, a + 1, factors[static_cast<std::size_t>(a)]);
  require(g.spatial() == in_shape, ErrorKind::kInvalidArgument, "upsample gradient shape mismatch");
  return g;
}

}  // namespace rog::model
