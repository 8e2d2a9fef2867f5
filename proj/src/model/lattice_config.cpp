#include "rog/model/lattice_config.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rog/core/error.hpp"

namespace rog::model {

std::vector<int> triangular_nodes(int length, int num_scales) {
  std::vector<int> n;
  for (int s = 0; s < num_scales; ++s) n.push_back(length + (num_scales - 1 - s));
  return n;
}

void LatticeConfig::validate() const {
  require(num_scales >= 1, ErrorKind::kInvalidConfig, "lattice needs at least one scale");
  require(length >= 1, ErrorKind::kInvalidConfig, "lattice length L must be >= 1");
  require(static_cast<int>(nodes_per_scale.size()) == num_scales, ErrorKind::kInvalidConfig,
          "nodes_per_scale must list every scale");
  require(static_cast<int>(widths.size()) == num_scales, ErrorKind::kInvalidConfig, "widths must list every scale");
  for (std::size_t s = 1; s < nodes_per_scale.size(); ++s)
    require(nodes_per_scale[s] < nodes_per_scale[s - 1], ErrorKind::kInvalidConfig,
            "nodes_per_scale must strictly decrease toward the deepest scale");
  require(nodes_per_scale.back() == length, ErrorKind::kInvalidConfig, "deepest scale must hold L nodes");
  for (int w : widths) require(w >= 1, ErrorKind::kInvalidConfig, "widths must be positive");
  require(num_classes >= 2, ErrorKind::kInvalidConfig, "need at least two classes");
  require(in_channels >= 1, ErrorKind::kInvalidConfig, "need at least one input channel");
  const int depth_factor = 1 << (num_scales - 1);
  for (int a = 0; a < 3; ++a) {
    const int f = initial_factors[static_cast<std::size_t>(a)];
    require(f == 1 || f == 2 || f == 4, ErrorKind::kInvalidConfig, "initial factors must be 1, 2 or 4");
    require(f * depth_factor <= 32, ErrorKind::kInvalidConfig, "coarsest resolution would fall below 1/32");
    require(patch_size[static_cast<std::size_t>(a)] >= 1 &&
                patch_size[static_cast<std::size_t>(a)] % (f * depth_factor) == 0,
            ErrorKind::kInvalidConfig, "patch size must be divisible by initial_factor * 2^(scales-1)");
  }
}

Index3 LatticeConfig::scale_shape(int s) const {
  Index3 out{};
  for (int a = 0; a < 3; ++a)
    out[static_cast<std::size_t>(a)] =
        patch_size[static_cast<std::size_t>(a)] / initial_factors[static_cast<std::size_t>(a)] / (1 << s);
  return out;
}

LatticeConfig make_config(int in_channels, int num_classes, Index3 patch, Index3 factors, int base_width,
                          int length) {
  LatticeConfig c;
  c.length = length;
  c.nodes_per_scale = triangular_nodes(length, c.num_scales);
  c.widths.clear();
  for (int s = 0; s < c.num_scales; ++s) c.widths.push_back(base_width << s);
  c.patch_size = patch;
  c.initial_factors = factors;
  c.num_classes = num_classes;
  c.in_channels = in_channels;
  c.validate();
  return c;
}

LatticeConfig auto_configure(const volumes::DatasetStats& stats, const volumes::TaskSpec& task,
                             long long memory_budget_voxels, int in_channels, int base_width) {
  require(memory_budget_voxels > 0, ErrorKind::kInvalidArgument, "memory budget must be positive");
  for (double s : stats.avg_shape) require(s > 0.0, ErrorKind::kInvalidArgument, "average shape must be positive");

  Index3 patch{};
  for (int a = 0; a < 3; ++a) {
    const int down = static_cast<int>(std::floor(stats.avg_shape[static_cast<std::size_t>(a)] / 32.0)) * 32;
    patch[static_cast<std::size_t>(a)] = std::clamp(down, 32, 128);
  }
  // Shrink the largest edge (last axis on ties) one 32-voxel step at a time.
  while (static_cast<long long>(voxel_count(patch)) > memory_budget_voxels) {
    int largest = 2;
    for (int a = 1; a >= 0; --a)
      if (patch[static_cast<std::size_t>(a)] > patch[static_cast<std::size_t>(largest)]) largest = a;
    if (patch[static_cast<std::size_t>(largest)] <= 32) break;
    patch[static_cast<std::size_t>(largest)] -= 32;
  }
  Index3 factors{};
  for (int a = 0; a < 3; ++a) {
    const int e = patch[static_cast<std::size_t>(a)];
    factors[static_cast<std::size_t>(a)] = e >= 128 ? 4 : (e >= 64 ? 2 : 1);
  }
  return make_config(in_channels, task.num_classes(), patch, factors, base_width, 2);
}

std::vector<NodeSpec> lattice_nodes(const LatticeConfig& cfg) {
  const int S = cfg.num_scales;
  const int last_col = cfg.nodes_per_scale[0] - 1;
  std::map<std::pair<int, int>, int> index;  // (scale, column) -> node index
  std::vector<NodeSpec> nodes;
  auto exists = [&](int s, int c) {
    return s >= 0 && s < S && c >= s && c < s + cfg.nodes_per_scale[static_cast<std::size_t>(s)];
  };
  for (int c = 0; c <= last_col; ++c) {
    for (int s = S - 1; s >= 0; --s) {
      if (!exists(s, c)) continue;
      NodeSpec n{s, c, cfg.widths[static_cast<std::size_t>(s)], {}};
      if (exists(s, c - 1)) n.inputs.push_back({EdgeKind::kSameScale, index.at({s, c - 1})});
      if (exists(s - 1, c - 1)) n.inputs.push_back({EdgeKind::kFromFiner, index.at({s - 1, c - 1})});
      if (exists(s + 1, c)) n.inputs.push_back({EdgeKind::kFromCoarser, index.at({s + 1, c})});
      index[{s, c}] = static_cast<int>(nodes.size());
      nodes.push_back(std::move(n));
    }
  }
  return nodes;
}

nlohmann::json to_json(const LatticeConfig& c) {
  return {{"num_scales", c.num_scales},
          {"L", c.length},
          {"nodes_per_scale", c.nodes_per_scale},
          {"widths", c.widths},
          {"initial_factors", c.initial_factors},
          {"patch_size", c.patch_size},
          {"num_classes", c.num_classes},
          {"in_channels", c.in_channels},
          {"init_seed", c.init_seed}};
}

LatticeConfig config_from_json(const nlohmann::json& j) {
  LatticeConfig c;
  c.num_scales = j.at("num_scales").get<int>();
  c.length = j.at("L").get<int>();
  c.nodes_per_scale = j.at("nodes_per_scale").get<std::vector<int>>();
  c.widths = j.at("widths").get<std::vector<int>>();
  c.initial_factors = j.at("initial_factors").get<Index3>();
  c.patch_size = j.at("patch_size").get<Index3>();
  c.num_classes = j.at("num_classes").get<int>();
  c.in_channels = j.at("in_channels").get<int>();
  c.init_seed = j.value("init_seed", std::uint64_t{0});
  c.validate();
  return c;
}

}  // namespace rog::model
