#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "rog/volumes/volume.hpp"

namespace rog::volumes {

struct SynthConfig {
  Index3 shape{32, 32, 32};
  int channels = 1;
  Vec3 spacing{1.0, 1.0, 1.0};
  // Organ semi-axes as fractions of the half-edge of each axis.
  double organ_radius_min = 0.45;
  double organ_radius_max = 0.75;
  bool tumor = true;
  double tumor_radius_min = 2.5;  // voxels
  double tumor_radius_max = 4.5;
  // Mean intensity per class {background, organ, tumor}; channel c adds c * channel_offset.
  std::vector<double> class_means{0.0, 1.0, 2.0};
  double channel_offset = 0.5;
  double noise = 0.2;
  // Bright isolated organ voxels (vessel-like speckle).
  double speckle_fraction = 0.0;
  double speckle_amplitude = 0.0;
};

// Deterministic in seed. Class 1 is an ellipsoidal organ; class 2 (when
// enabled) a sphere lying in the organ interior.
std::tuple<Volume, LabelMask, TaskSpec> synth_case(std::uint64_t seed, const SynthConfig& cfg);

}  // namespace rog::volumes
