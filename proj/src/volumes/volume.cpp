#include "rog/volumes/volume.hpp"

#include <algorithm>
#include <cmath>

#include "rog/core/error.hpp"

namespace rog::volumes {

void Volume::validate() const {
  require(data.rank() == 4, ErrorKind::kInvalidArgument, "volume data must be rank 4 (C, D, H, W)");
  require(data.dim(0) >= 1, ErrorKind::kInvalidArgument, "volume needs at least one channel");
  for (int a = 1; a < 4; ++a)
    require(data.dim(a) >= 1, ErrorKind::kInvalidArgument, "volume spatial dims must be >= 1");
  for (double s : spacing)
    require(s > 0.0 && std::isfinite(s), ErrorKind::kInvalidArgument, "voxel spacing must be positive");
  require(data.all_finite(), ErrorKind::kInvalidArgument, "volume contains non-finite intensities");
}

std::size_t LabelMask::count(int cls) const {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), static_cast<std::uint8_t>(cls)));
}

void LabelMask::validate() const {
  require(num_classes >= 2, ErrorKind::kInvalidArgument, "label mask needs at least two classes");
  require(labels.size() == voxel_count(shape), ErrorKind::kInvalidArgument, "label mask size mismatch");
  for (auto l : labels)
    require(l < num_classes, ErrorKind::kInvalidArgument, "label outside [0, num_classes)");
}

const char* to_string(ClassRole r) {
  switch (r) {
    case ClassRole::kBackground: return "background";
    case ClassRole::kOrgan: return "organ";
    case ClassRole::kTumor: return "tumor";
  }
  return "?";
}

const char* to_string(Modality m) { return m == Modality::kCT ? "CT" : "MR"; }

ClassRole role_from_string(const std::string& s) {
  if (s == "background") return ClassRole::kBackground;
  if (s == "organ") return ClassRole::kOrgan;
  if (s == "tumor") return ClassRole::kTumor;
  throw Error(ErrorKind::kInvalidConfig, "unknown class role '" + s + "'");
}

Modality modality_from_string(const std::string& s) {
  if (s == "CT" || s == "ct") return Modality::kCT;
  if (s == "MR" || s == "mr" || s == "MRI") return Modality::kMR;
  throw Error(ErrorKind::kInvalidConfig, "unknown modality '" + s + "'");
}

void TaskSpec::validate() const {
  require(class_roles.size() >= 2, ErrorKind::kInvalidConfig, "task needs at least two classes");
  const auto bg = std::count(class_roles.begin(), class_roles.end(), ClassRole::kBackground);
  require(bg == 1, ErrorKind::kInvalidConfig, "task must have exactly one background class");
  if (clean_mean_dice) {
    require(*clean_mean_dice >= 0.0 && *clean_mean_dice <= 1.0, ErrorKind::kInvalidConfig,
            "clean mean Dice must lie in [0, 1]");
  }
}

}  // namespace rog::volumes
