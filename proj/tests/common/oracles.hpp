#pragma once

// Independent reference implementations used to check the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "rog/core/tensor.hpp"
#include "rog/volumes/volume.hpp"

namespace oracle {

// Dice from explicit voxel index sets.
inline double dice(const rog::volumes::LabelMask& pred, const rog::volumes::LabelMask& gt, int k) {
  std::set<std::size_t> a, b;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred.labels[i] == k) a.insert(i);
    if (gt.labels[i] == k) b.insert(i);
  }
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (std::size_t i : a) inter += b.count(i);
  return 2.0 * static_cast<double>(inter) / static_cast<double>(a.size() + b.size());
}

// Component sizes by repeated recursive flood fill, 26- or 6-connectivity.
// Components are listed in raster order of their first voxel.
inline std::vector<std::vector<std::size_t>> components(const std::vector<std::uint8_t>& mask, const rog::Index3& s,
                                                        bool full) {
  std::vector<int> seen(mask.size(), 0);
  std::vector<std::vector<std::size_t>> out;
  std::function<void(int, int, int, std::vector<std::size_t>&)> fill = [&](int z, int y, int x,
                                                                           std::vector<std::size_t>& acc) {
    if (z < 0 || y < 0 || x < 0 || z >= s[0] || y >= s[1] || x >= s[2]) return;
    const std::size_t i = (static_cast<std::size_t>(z) * s[1] + y) * s[2] + x;
    if (!mask[i] || seen[i]) return;
    seen[i] = 1;
    acc.push_back(i);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int n = std::abs(dz) + std::abs(dy) + std::abs(dx);
          if (n == 0 || (!full && n > 1)) continue;
          fill(z + dz, y + dy, x + dx, acc);
        }
  };
  for (int z = 0; z < s[0]; ++z)
    for (int y = 0; y < s[1]; ++y)
      for (int x = 0; x < s[2]; ++x) {
        const std::size_t i = (static_cast<std::size_t>(z) * s[1] + y) * s[2] + x;
        if (mask[i] && !seen[i]) {
          out.emplace_back();
          fill(z, y, x, out.back());
        }
      }
  return out;
}

inline std::vector<std::uint8_t> largest(const std::vector<std::uint8_t>& mask, const rog::Index3& s) {
  const auto comps = components(mask, s, true);
  std::vector<std::uint8_t> out(mask.size(), 0);
  const std::vector<std::size_t>* best = nullptr;
  for (const auto& c : comps)
    if (!best || c.size() > best->size()) best = &c;
  if (best)
    for (std::size_t i : *best) out[i] = 1;
  return out;
}

// Five-point stencil of f along direction d, compared with <grad, d>.
// Returns |fd - an| / max(|fd|, |an|, floor).
inline double directional_check(const std::function<double(const rog::Tensor&)>& f, const rog::Tensor& x,
                                const rog::Tensor& grad, const rog::Tensor& dir, double h, double floor = 1e-6) {
  auto at = [&](double t) {
    rog::Tensor v = x;
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = static_cast<float>(x[i] + t * dir[i]);
    return f(v);
  };
  const double num = (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
  double an = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) an += static_cast<double>(grad[i]) * dir[i];
  return std::abs(num - an) / std::max({std::abs(num), std::abs(an), floor});
}

}  // namespace oracle
