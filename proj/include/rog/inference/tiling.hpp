#pragma once

#include <vector>

#include "rog/core/tensor.hpp"

namespace rog::inference {

struct TilePlan {
  Index3 patch_size{};
  Index3 volume_shape{};  // unpadded
  Index3 padded_shape{};  // max(volume, patch) per axis
  std::vector<Index3> offsets;  // lexicographic (z, y, x)
  double overlap_fraction = 0.5;
};

// stride = ceil(patch * (1 - overlap)); the last offset per axis is clamped so
// the final patch ends on the (padded) boundary.
TilePlan plan_tiles(const Index3& volume_shape, const Index3& patch_size, double overlap_fraction = 0.5);

// w(v) = 1 / (1 + |v - c| / r), c the patch centre and r half the patch diagonal.
Tensor fusion_weights(const Index3& patch_size);

// Weighted average of per-patch maps (channels x patch) into channels x volume.
// Patches may reach into the padded margin; that part is dropped.
Tensor fuse_predictions(const std::vector<Tensor>& patch_maps, const TilePlan& plan);
Tensor fuse_predictions(const std::vector<Tensor>& patch_maps, const std::vector<Index3>& offsets,
                        const Index3& volume_shape);

// Per-voxel normalised weight of each patch; used to route gradients of a
// fused map back to the patches.
std::vector<Tensor> fusion_shares(const TilePlan& plan);

// Edge-padded copy of x covering plan.padded_shape, then the patch at offset.
Tensor extract_patch(const Tensor& x, const TilePlan& plan, const Index3& offset);

// Adds a patch-shaped gradient back into a volume-shaped accumulator (edge
// padding folds onto the border voxels).
void scatter_patch(Tensor& acc, const Tensor& patch, const TilePlan& plan, const Index3& offset);

}  // namespace rog::inference
