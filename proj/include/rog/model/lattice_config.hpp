#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "rog/core/tensor.hpp"
#include "rog/volumes/volume.hpp"

namespace rog::model {

struct LatticeConfig {
  int num_scales = 4;
  int length = 2;                      // L: nodes at the deepest scale
  std::vector<int> nodes_per_scale;    // finest first
  std::vector<int> widths{48, 96, 192, 384};
  Index3 initial_factors{1, 1, 1};     // per-axis downsampling of the initial module
  Index3 patch_size{32, 32, 32};
  int num_classes = 2;
  int in_channels = 1;
  std::uint64_t init_seed = 0;

  // Throws invalid-config when an invariant is broken.
  void validate() const;

  // Spatial size of the feature maps at scale s (0 = finest lattice scale).
  Index3 scale_shape(int s) const;
};

// L + (num_scales - 1 - s) nodes at 0-based scale s.
std::vector<int> triangular_nodes(int length, int num_scales);

// Reference configuration with the lattice widths doubling from base_width.
LatticeConfig make_config(int in_channels, int num_classes, Index3 patch, Index3 factors, int base_width = 48,
                          int length = 2);

// Patch size and initial strides from dataset statistics and a voxel budget.
LatticeConfig auto_configure(const volumes::DatasetStats& stats, const volumes::TaskSpec& task,
                             long long memory_budget_voxels, int in_channels = 1, int base_width = 48);

enum class EdgeKind { kSameScale, kFromFiner, kFromCoarser };

struct NodeEdge {
  EdgeKind kind;
  int source;  // node index
};

struct NodeSpec {
  int scale;   // 0 = finest
  int column;
  int width;
  std::vector<NodeEdge> inputs;  // empty only for the first node, fed by the initial module
};

// Lattice nodes in evaluation order (by column, coarse to fine within a column).
// Node (s, c) reads (s, c-1), (s-1, c-1) through a strided 1x1x1 convolution,
// and (s+1, c) through a 1x1x1 convolution plus trilinear upsampling.
std::vector<NodeSpec> lattice_nodes(const LatticeConfig& cfg);

nlohmann::json to_json(const LatticeConfig& cfg);
LatticeConfig config_from_json(const nlohmann::json& j);

}  // namespace rog::model
