#pragma once

#include <cstdint>

#include "rog/volumes/volume.hpp"

namespace rog::training {

struct PatchPair {
  volumes::Volume image;
  volumes::LabelMask mask;
};

// With probability fg_patch_prob the patch is centred on a uniformly drawn
// foreground voxel, otherwise on a uniformly drawn voxel. Axes shorter than
// the patch are edge padded.
PatchPair sample_patch(const volumes::Case& c, const Index3& patch_size, double fg_patch_prob, std::uint64_t seed);

// Same, returning the chosen centre (used by tests).
PatchPair sample_patch(const volumes::Case& c, const Index3& patch_size, double fg_patch_prob, std::uint64_t seed,
                       Index3* centre);

// Crop starting at origin (may be negative or exceed the volume; edge padded).
PatchPair crop(const volumes::Case& c, const Index3& origin, const Index3& patch_size);

}  // namespace rog::training
