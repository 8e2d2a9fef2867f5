#include "rog/training/sampling.hpp"

#include <algorithm>
#include <random>

#include "rog/core/error.hpp"

namespace rog::training {

PatchPair crop(const volumes::Case& c, const Index3& origin, const Index3& ps) {
  const Index3 vs = c.image.shape();
  require(c.mask.shape == vs, ErrorKind::kInvalidArgument, "image and mask differ in shape");
  PatchPair out;
  out.image = volumes::Volume(Tensor(c.image.channels(), ps), c.image.spacing);
  out.mask = volumes::LabelMask(ps, c.mask.num_classes);
  for (int z = 0; z < ps[0]; ++z) {
    const int sz = std::clamp(origin[0] + z, 0, vs[0] - 1);
    for (int y = 0; y < ps[1]; ++y) {
      const int sy = std::clamp(origin[1] + y, 0, vs[1] - 1);
      for (int x = 0; x < ps[2]; ++x) {
        const int sx = std::clamp(origin[2] + x, 0, vs[2] - 1);
        for (int ch = 0; ch < c.image.channels(); ++ch) out.image.data.at(ch, z, y, x) = c.image.data.at(ch, sz, sy, sx);
        out.mask.at(z, y, x) = c.mask.at(sz, sy, sx);
      }
    }
  }
  return out;
}

PatchPair sample_patch(const volumes::Case& c, const Index3& ps, double fg_patch_prob, std::uint64_t seed) {
  return sample_patch(c, ps, fg_patch_prob, seed, nullptr);
}

PatchPair sample_patch(const volumes::Case& c, const Index3& ps, double fg_patch_prob, std::uint64_t seed,
                       Index3* centre) {
  require(fg_patch_prob >= 0.0 && fg_patch_prob <= 1.0, ErrorKind::kInvalidArgument, "fg_patch_prob must lie in [0, 1]");
  const Index3 vs = c.image.shape();
  const std::size_t n = voxel_count(vs);
  require(n > 0, ErrorKind::kInvalidArgument, "empty volume");
  std::mt19937_64 rng(seed);
  const bool want_fg = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < fg_patch_prob;

  std::size_t v = 0;
  bool chosen = false;
  if (want_fg) {
    std::vector<std::size_t> fg;
    for (std::size_t i = 0; i < n; ++i)
      if (c.mask.labels[i] != 0) fg.push_back(i);
    if (!fg.empty()) {
      v = fg[std::uniform_int_distribution<std::size_t>(0, fg.size() - 1)(rng)];
      chosen = true;
    }
  }
  if (!chosen) v = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  const Index3 ctr{static_cast<int>(v / (static_cast<std::size_t>(vs[1]) * vs[2])),
                   static_cast<int>((v / vs[2]) % vs[1]), static_cast<int>(v % vs[2])};
  if (centre) *centre = ctr;

  Index3 origin{};
  for (std::size_t a = 0; a < 3; ++a) {
    if (ps[a] >= vs[a])
      origin[a] = -((ps[a] - vs[a]) / 2);
    else
      origin[a] = std::clamp(ctr[a] - ps[a] / 2, 0, vs[a] - ps[a]);
  }
  return crop(c, origin, ps);
}

}  // namespace rog::training
