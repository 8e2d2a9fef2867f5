#pragma once

#include <cstdint>
#include <vector>

#include "rog/volumes/volume.hpp"

namespace rog::inference {

enum class Connectivity { k6 = 6, k26 = 26 };

// Connected-component labelling in raster order. Returns one id per voxel
// (0 for background, components numbered from 1 by first-visited voxel) and
// fills sizes[id - 1].
std::vector<int> label_components(const std::vector<std::uint8_t>& mask, const Index3& shape, Connectivity conn,
                                  std::vector<std::size_t>* sizes);

// Keeps only the biggest component; ties go to the one seeded first in
// raster order.
std::vector<std::uint8_t> largest_component(const std::vector<std::uint8_t>& mask, const Index3& shape,
                                            Connectivity conn = Connectivity::k26);

// Tumor-role components smaller than threshold_fraction * avg_object_voxels
// take the majority label of their outer shell (ties to the lower class).
// Organ-role classes keep only their largest component.
volumes::LabelMask fuse_small_components(const volumes::LabelMask& labels, const volumes::TaskSpec& task,
                                         double threshold_fraction = 0.1);

}  // namespace rog::inference
