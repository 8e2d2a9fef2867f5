#include "rog/training/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "rog/core/error.hpp"

namespace rog::training {

AugmentPolicy AugmentPolicy::none() {
  AugmentPolicy p;
  p.rotation = p.scaling = p.mirror = p.gamma = false;
  return p;
}

void AugmentPolicy::validate() const {
  require(max_rotation_deg >= 0.0 && max_rotation_deg <= 180.0, ErrorKind::kInvalidConfig, "rotation range out of bounds");
  require(scale_min > 0.0 && scale_min <= scale_max, ErrorKind::kInvalidConfig, "invalid scale range");
  require(gamma_min > 0.0 && gamma_min <= gamma_max, ErrorKind::kInvalidConfig, "invalid gamma range");
  for (double p : {spatial_prob, mirror_prob, gamma_prob})
    require(p >= 0.0 && p <= 1.0, ErrorKind::kInvalidConfig, "augmentation probability out of [0, 1]");
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

Mat3 rotation(int axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const int i = (axis + 1) % 3, j = (axis + 2) % 3;
  Mat3 r{};
  for (int k = 0; k < 3; ++k) r[k][k] = 1.0;
  r[i][i] = c;
  r[i][j] = -s;
  r[j][i] = s;
  r[j][j] = c;
  return r;
}

// Pulls every output voxel from m * (p - centre) + centre in the input.
PatchPair warp(const PatchPair& in, const Mat3& m) {
  const Index3 s = in.mask.shape;
  const int channels = in.image.channels();
  PatchPair out = in;
  const double cz = (s[0] - 1) / 2.0, cy = (s[1] - 1) / 2.0, cx = (s[2] - 1) / 2.0;
  auto clampd = [](double v, int n) { return std::clamp(v, 0.0, static_cast<double>(n - 1)); };
  for (int z = 0; z < s[0]; ++z)
    for (int y = 0; y < s[1]; ++y)
      for (int x = 0; x < s[2]; ++x) {
        const double p[3] = {z - cz, y - cy, x - cx};
        const double q[3] = {
            clampd(m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2] + cz, s[0]),
            clampd(m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2] + cy, s[1]),
            clampd(m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2] + cx, s[2]),
        };
        out.mask.at(z, y, x) = in.mask.at(static_cast<int>(std::lround(q[0])), static_cast<int>(std::lround(q[1])),
                                          static_cast<int>(std::lround(q[2])));
        int i0[3], i1[3];
        double f[3];
        for (int a = 0; a < 3; ++a) {
          i0[a] = static_cast<int>(std::floor(q[a]));
          i1[a] = std::min(i0[a] + 1, s[static_cast<std::size_t>(a)] - 1);
          f[a] = q[a] - i0[a];
        }
        for (int c = 0; c < channels; ++c) {
          const Tensor& t = in.image.data;
          double v = 0.0;
          for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                const double w = (dz ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dx ? f[2] : 1 - f[2]);
                if (w == 0.0) continue;
                v += w * t.at(c, dz ? i1[0] : i0[0], dy ? i1[1] : i0[1], dx ? i1[2] : i0[2]);
              }
          out.image.data.at(c, z, y, x) = static_cast<float>(v);
        }
      }
  return out;
}

void flip(PatchPair& p, int axis) {
  const Index3 s = p.mask.shape;
  const int channels = p.image.channels();
  for (int z = 0; z < s[0]; ++z)
    for (int y = 0; y < s[1]; ++y)
      for (int x = 0; x < s[2]; ++x) {
        int q[3] = {z, y, x};
        q[axis] = s[static_cast<std::size_t>(axis)] - 1 - q[axis];
        const bool first = (axis == 0 ? z : axis == 1 ? y : x) < q[axis];
        if (!first) continue;
        std::swap(p.mask.at(z, y, x), p.mask.at(q[0], q[1], q[2]));
        for (int c = 0; c < channels; ++c) std::swap(p.image.data.at(c, z, y, x), p.image.data.at(c, q[0], q[1], q[2]));
      }
}

}  // namespace

PatchPair augment(const PatchPair& in, std::uint64_t seed, const AugmentPolicy& policy) {
  policy.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // Every draw happens unconditionally so the stream does not depend on which
  // transforms are enabled.
  const bool spatial = u01(rng) < policy.spatial_prob;
  std::array<double, 3> angles{};
  for (double& a : angles) a = (2.0 * u01(rng) - 1.0) * policy.max_rotation_deg * std::numbers::pi / 180.0;
  const double scale = policy.scale_min + u01(rng) * (policy.scale_max - policy.scale_min);
  std::array<bool, 3> flips{};
  for (bool& f : flips) f = u01(rng) < policy.mirror_prob;
  const bool do_gamma = u01(rng) < policy.gamma_prob;
  const double gamma = policy.gamma_min + u01(rng) * (policy.gamma_max - policy.gamma_min);

  PatchPair out = in;
  if (spatial && (policy.rotation || policy.scaling)) {
    Mat3 m{};
    for (int k = 0; k < 3; ++k) m[k][k] = 1.0;
    if (policy.rotation)
      for (int a = 0; a < 3; ++a) m = mul(m, rotation(a, angles[static_cast<std::size_t>(a)]));
    if (policy.scaling)
      for (auto& row : m)
        for (double& v : row) v /= scale;
    out = warp(out, m);
  }
  if (policy.mirror)
    for (int a = 0; a < 3; ++a)
      if (flips[static_cast<std::size_t>(a)]) flip(out, a);
  if (policy.gamma && do_gamma && gamma != 1.0) {
    for (int c = 0; c < out.image.channels(); ++c) {
      float* d = out.image.data.channel(c);
      const std::size_t n = out.image.data.plane();
      const auto [lo, hi] = std::minmax_element(d, d + n);
      const double l = *lo, r = *hi - *lo;
      if (r <= 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) d[i] = static_cast<float>(l + r * std::pow((d[i] - l) / r, gamma));
    }
  }
  return out;
}

}  // namespace rog::training
