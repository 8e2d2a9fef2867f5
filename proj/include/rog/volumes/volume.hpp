#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rog/core/tensor.hpp"

namespace rog::volumes {

// Multi-channel intensity grid (C x D x H x W) with physical voxel spacing in
// mm, ordered like the spatial axes (D, H, W).
struct Volume {
  Tensor data;
  Vec3 spacing{1.0, 1.0, 1.0};
  std::optional<Vec3> origin;

  Volume() = default;
  Volume(Tensor d, Vec3 s, std::optional<Vec3> o = std::nullopt)
      : data(std::move(d)), spacing(s), origin(o) {}

  int channels() const { return data.channels(); }
  Index3 shape() const { return data.spatial(); }

  // Throws invalid-argument when an invariant is broken.
  void validate() const;
};

struct LabelMask {
  Index3 shape{0, 0, 0};
  int num_classes = 2;
  std::vector<std::uint8_t> labels;

  LabelMask() = default;
  LabelMask(const Index3& s, int classes, std::uint8_t fill = 0)
      : shape(s), num_classes(classes), labels(voxel_count(s), fill) {}

  std::size_t size() const { return labels.size(); }
  std::uint8_t& at(int z, int y, int x) {
    return labels[(static_cast<std::size_t>(z) * shape[1] + y) * shape[2] + x];
  }
  std::uint8_t at(int z, int y, int x) const {
    return labels[(static_cast<std::size_t>(z) * shape[1] + y) * shape[2] + x];
  }
  std::size_t count(int cls) const;

  void validate() const;
};

enum class ClassRole { kBackground, kOrgan, kTumor };
enum class Modality { kCT, kMR };

const char* to_string(ClassRole r);
const char* to_string(Modality m);
ClassRole role_from_string(const std::string& s);
Modality modality_from_string(const std::string& s);

struct TaskSpec {
  std::string name = "task";
  std::vector<ClassRole> class_roles;
  Modality modality = Modality::kCT;
  std::optional<double> clean_mean_dice;  // mu_i
  std::vector<double> avg_object_voxels;  // per class; index 0 unused

  int num_classes() const { return static_cast<int>(class_roles.size()); }
  void validate() const;
};

struct IntensityStats {
  double p005 = 0.0;
  double p995 = 0.0;
  double mean = 0.0;
  double std = 1.0;
};

struct DatasetStats {
  Vec3 median_spacing{1.0, 1.0, 1.0};
  Vec3 avg_shape{0.0, 0.0, 0.0};
  std::vector<IntensityStats> channels;  // one entry per image channel
};

// One case as handled by the pipeline.
struct Case {
  std::string id;
  Volume image;
  LabelMask mask;
};

}  // namespace rog::volumes
