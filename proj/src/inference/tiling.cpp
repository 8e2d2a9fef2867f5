#include "rog/inference/tiling.hpp"

#include <algorithm>
#include <cmath>

#include "rog/core/error.hpp"

namespace rog::inference {

namespace {

std::vector<int> axis_offsets(int extent, int patch, int stride) {
  std::vector<int> out;
  for (int o = 0;; o += stride) {
    if (o + patch >= extent) {
      out.push_back(extent - patch);
      break;
    }
    out.push_back(o);
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline int clampi(int v, int n) { return std::clamp(v, 0, n - 1); }

}  // namespace

TilePlan plan_tiles(const Index3& volume_shape, const Index3& patch_size, double overlap_fraction) {
  for (int a = 0; a < 3; ++a) {
    require(volume_shape[static_cast<std::size_t>(a)] >= 1, ErrorKind::kInvalidArgument, "zero-sized volume");
    require(patch_size[static_cast<std::size_t>(a)] >= 1, ErrorKind::kInvalidArgument, "zero-sized patch");
  }
  require(overlap_fraction >= 0.0 && overlap_fraction < 1.0, ErrorKind::kInvalidArgument, "overlap must lie in [0, 1)");
  TilePlan plan;
  plan.patch_size = patch_size;
  plan.volume_shape = volume_shape;
  plan.overlap_fraction = overlap_fraction;
  std::array<std::vector<int>, 3> offs;
  for (std::size_t a = 0; a < 3; ++a) {
    plan.padded_shape[a] = std::max(volume_shape[a], patch_size[a]);
    const int stride = std::max(1, static_cast<int>(std::ceil(patch_size[a] * (1.0 - overlap_fraction) - 1e-9)));
    offs[a] = axis_offsets(plan.padded_shape[a], patch_size[a], stride);
  }
  for (int z : offs[0])
    for (int y : offs[1])
      for (int x : offs[2]) plan.offsets.push_back({z, y, x});
  return plan;
}

Tensor fusion_weights(const Index3& p) {
  Tensor w(1, p);
  const double cz = (p[0] - 1) / 2.0, cy = (p[1] - 1) / 2.0, cx = (p[2] - 1) / 2.0;
  const double r = 0.5 * std::sqrt(double(p[0]) * p[0] + double(p[1]) * p[1] + double(p[2]) * p[2]);
  for (int z = 0; z < p[0]; ++z)
    for (int y = 0; y < p[1]; ++y)
      for (int x = 0; x < p[2]; ++x) {
        const double d = std::sqrt((z - cz) * (z - cz) + (y - cy) * (y - cy) + (x - cx) * (x - cx));
        w.at(0, z, y, x) = static_cast<float>(1.0 / (1.0 + d / r));
      }
  return w;
}

Tensor fuse_predictions(const std::vector<Tensor>& patch_maps, const TilePlan& plan) {
  return fuse_predictions(patch_maps, plan.offsets, plan.volume_shape);
}

Tensor fuse_predictions(const std::vector<Tensor>& patch_maps, const std::vector<Index3>& offsets,
                        const Index3& vs) {
  require(patch_maps.size() == offsets.size() && !patch_maps.empty(), ErrorKind::kInvalidArgument,
          "one map per patch offset is required");
  const int channels = patch_maps.front().channels();
  const Index3 ps = patch_maps.front().spatial();
  const Tensor w = fusion_weights(ps);
  std::vector<double> acc(static_cast<std::size_t>(channels) * voxel_count(vs), 0.0);
  std::vector<double> wsum(voxel_count(vs), 0.0);
  const std::size_t plane = voxel_count(vs);

  for (std::size_t i = 0; i < patch_maps.size(); ++i) {
    const Tensor& m = patch_maps[i];
    require(m.channels() == channels && m.spatial() == ps, ErrorKind::kInvalidArgument, "patch map shape mismatch");
    const Index3& o = offsets[i];
    for (int z = 0; z < ps[0]; ++z) {
      const int vz = o[0] + z;
      if (vz >= vs[0]) continue;
      for (int y = 0; y < ps[1]; ++y) {
        const int vy = o[1] + y;
        if (vy >= vs[1]) continue;
        for (int x = 0; x < ps[2]; ++x) {
          const int vx = o[2] + x;
          if (vx >= vs[2]) continue;
          const std::size_t v = (static_cast<std::size_t>(vz) * vs[1] + vy) * vs[2] + vx;
          const double wv = w.at(0, z, y, x);
          wsum[v] += wv;
          for (int c = 0; c < channels; ++c) acc[c * plane + v] += wv * m.at(c, z, y, x);
        }
      }
    }
  }
  Tensor out(channels, vs);
  for (std::size_t v = 0; v < plane; ++v) {
    require(wsum[v] > 0.0, ErrorKind::kCoverage, "voxel not covered by any patch");
    for (int c = 0; c < channels; ++c) out[c * plane + v] = static_cast<float>(acc[c * plane + v] / wsum[v]);
  }
  return out;
}

std::vector<Tensor> fusion_shares(const TilePlan& plan) {
  const Index3 vs = plan.volume_shape, ps = plan.patch_size;
  const Tensor w = fusion_weights(ps);
  std::vector<double> wsum(voxel_count(vs), 0.0);
  auto visit = [&](const Index3& o, auto&& fn) {
    for (int z = 0; z < ps[0]; ++z)
      for (int y = 0; y < ps[1]; ++y)
        for (int x = 0; x < ps[2]; ++x) {
          const int vz = o[0] + z, vy = o[1] + y, vx = o[2] + x;
          if (vz >= vs[0] || vy >= vs[1] || vx >= vs[2]) continue;
          fn(z, y, x, (static_cast<std::size_t>(vz) * vs[1] + vy) * vs[2] + vx);
        }
  };
  for (const auto& o : plan.offsets) visit(o, [&](int z, int y, int x, std::size_t v) { wsum[v] += w.at(0, z, y, x); });
  std::vector<Tensor> shares;
  for (const auto& o : plan.offsets) {
    Tensor s(1, ps);
    visit(o, [&](int z, int y, int x, std::size_t v) {
      s.at(0, z, y, x) = static_cast<float>(w.at(0, z, y, x) / wsum[v]);
    });
    shares.push_back(std::move(s));
  }
  return shares;
}

Tensor extract_patch(const Tensor& x, const TilePlan& plan, const Index3& o) {
  const Index3 vs = x.spatial(), ps = plan.patch_size;
  Tensor p(x.channels(), ps);
  for (int c = 0; c < x.channels(); ++c)
    for (int z = 0; z < ps[0]; ++z)
      for (int y = 0; y < ps[1]; ++y)
        for (int xx = 0; xx < ps[2]; ++xx)
          p.at(c, z, y, xx) = x.at(c, clampi(o[0] + z, vs[0]), clampi(o[1] + y, vs[1]), clampi(o[2] + xx, vs[2]));
  return p;
}

void scatter_patch(Tensor& acc, const Tensor& patch, const TilePlan& plan, const Index3& o) {
  const Index3 vs = acc.spatial(), ps = plan.patch_size;
  for (int c = 0; c < acc.channels(); ++c)
    for (int z = 0; z < ps[0]; ++z)
      for (int y = 0; y < ps[1]; ++y)
        for (int x = 0; x < ps[2]; ++x)
          acc.at(c, clampi(o[0] + z, vs[0]), clampi(o[1] + y, vs[1]), clampi(o[2] + x, vs[2])) += patch.at(c, z, y, x);
}

}  // namespace rog::inference
