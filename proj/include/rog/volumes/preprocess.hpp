#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rog/volumes/volume.hpp"

namespace rog::volumes {

// Linear-interpolated percentile (q in [0, 100]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

Index3 resampled_shape(const Index3& shape, const Vec3& spacing, const Vec3& target);

// Trilinear for intensities, nearest neighbour for labels.
std::pair<Volume, std::optional<LabelMask>> resample(const Volume& v, const LabelMask* mask,
                                                     const Vec3& target_spacing);

struct LabeledVolume {
  const Volume* image;
  const LabelMask* mask;
};

// Pools foreground intensities (label != 0) across all cases.
DatasetStats compute_dataset_stats(std::span<const LabeledVolume> cases);

// Statistics over every voxel of one volume (per-volume MR convention).
DatasetStats compute_volume_stats(const Volume& v);

// Clip to [p005, p995] then z-score, per channel.
Volume normalize(const Volume& v, const DatasetStats& s);

// Per-channel affine map between model intensities and the [0, 1] attack
// space. Constant channels sit at 0.5 and map back to their constant.
struct AffineMap {
  std::vector<double> lo;
  std::vector<double> range;

  Tensor to_unit(const Tensor& x) const;
  Tensor from_unit(const Tensor& a) const;
  // d(model intensity) / d(attack-space value) for channel c.
  double scale(int c) const { return range.at(static_cast<std::size_t>(c)); }
};

std::pair<Volume, AffineMap> to_attack_space(const Volume& v);

}  // namespace rog::volumes
