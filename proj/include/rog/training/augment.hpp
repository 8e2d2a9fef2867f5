#pragma once

#include <cstdint>

#include "rog/training/sampling.hpp"

namespace rog::training {

struct AugmentPolicy {
  bool rotation = true;
  double max_rotation_deg = 30.0;  // about each axis
  bool scaling = true;
  double scale_min = 0.85;
  double scale_max = 1.25;
  double spatial_prob = 0.2;  // chance that rotation/scaling is applied at all
  bool mirror = true;
  double mirror_prob = 0.5;  // per axis
  bool gamma = true;
  double gamma_min = 0.7;
  double gamma_max = 1.4;
  double gamma_prob = 0.3;

  static AugmentPolicy none();
  void validate() const;
};

// Random draws depend on the seed only, never on the data.
PatchPair augment(const PatchPair& in, std::uint64_t seed, const AugmentPolicy& policy);

}  // namespace rog::training
