#include "rog/inference/components.hpp"

#include <map>

#include "rog/core/error.hpp"

namespace rog::inference {

using volumes::ClassRole;
using volumes::LabelMask;

namespace {

template <typename Fn>
void for_each_neighbour(int z, int y, int x, const Index3& s, Connectivity conn, Fn&& fn) {
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dz) + std::abs(dy) + std::abs(dx);
        if (manhattan == 0) continue;
        if (conn == Connectivity::k6 && manhattan != 1) continue;
        const int nz = z + dz, ny = y + dy, nx = x + dx;
        if (nz < 0 || ny < 0 || nx < 0 || nz >= s[0] || ny >= s[1] || nx >= s[2]) continue;
        fn(nz, ny, nx, (static_cast<std::size_t>(nz) * s[1] + ny) * s[2] + nx);
      }
}

}  // namespace

std::vector<int> label_components(const std::vector<std::uint8_t>& mask, const Index3& s, Connectivity conn,
                                  std::vector<std::size_t>* sizes) {
  require(mask.size() == voxel_count(s), ErrorKind::kInvalidArgument, "mask size does not match shape");
  std::vector<int> ids(mask.size(), 0);
  if (sizes) sizes->clear();
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (!mask[seed] || ids[seed]) continue;
    ++next;
    std::size_t count = 0;
    ids[seed] = next;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      ++count;
      const int x = static_cast<int>(v % s[2]);
      const int y = static_cast<int>((v / s[2]) % s[1]);
      const int z = static_cast<int>(v / (static_cast<std::size_t>(s[1]) * s[2]));
      for_each_neighbour(z, y, x, s, conn, [&](int, int, int, std::size_t n) {
        if (mask[n] && !ids[n]) {
          ids[n] = next;
          stack.push_back(n);
        }
      });
    }
    if (sizes) sizes->push_back(count);
  }
  return ids;
}

std::vector<std::uint8_t> largest_component(const std::vector<std::uint8_t>& mask, const Index3& shape,
                                            Connectivity conn) {
  std::vector<std::size_t> sizes;
  const auto ids = label_components(mask, shape, conn, &sizes);
  std::vector<std::uint8_t> out(mask.size(), 0);
  if (sizes.empty()) return out;
  int best = 1;
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] > sizes[static_cast<std::size_t>(best - 1)]) best = static_cast<int>(i) + 1;
  for (std::size_t v = 0; v < mask.size(); ++v) out[v] = ids[v] == best;
  return out;
}

LabelMask fuse_small_components(const LabelMask& labels, const volumes::TaskSpec& task, double threshold_fraction) {
  labels.validate();
  require(task.num_classes() == labels.num_classes, ErrorKind::kInvalidArgument, "task and mask disagree on classes");
  const Index3 s = labels.shape;
  LabelMask out = labels;

  for (int k = 1; k < task.num_classes(); ++k) {
    if (task.class_roles[static_cast<std::size_t>(k)] != ClassRole::kTumor) continue;
    require(static_cast<std::size_t>(k) < task.avg_object_voxels.size() && task.avg_object_voxels[k] > 0.0,
            ErrorKind::kMissingReference, "average object size missing for a tumor class");
    const double threshold = threshold_fraction * task.avg_object_voxels[static_cast<std::size_t>(k)];
    std::vector<std::uint8_t> mask(out.size());
    for (std::size_t v = 0; v < out.size(); ++v) mask[v] = out.labels[v] == k;
    std::vector<std::size_t> sizes;
    const auto ids = label_components(mask, s, Connectivity::k26, &sizes);
    if (sizes.empty()) continue;

    std::vector<std::vector<std::size_t>> members(sizes.size());
    for (std::size_t v = 0; v < ids.size(); ++v)
      if (ids[v] && static_cast<double>(sizes[static_cast<std::size_t>(ids[v] - 1)]) < threshold)
        members[static_cast<std::size_t>(ids[v] - 1)].push_back(v);

    const std::vector<std::uint8_t> snapshot = out.labels;
    for (std::size_t c = 0; c < members.size(); ++c) {
      if (members[c].empty()) continue;
      const int id = static_cast<int>(c) + 1;
      std::vector<std::uint8_t> seen(snapshot.size(), 0);
      std::map<int, std::size_t> votes;
      for (std::size_t v : members[c]) {
        const int x = static_cast<int>(v % s[2]);
        const int y = static_cast<int>((v / s[2]) % s[1]);
        const int z = static_cast<int>(v / (static_cast<std::size_t>(s[1]) * s[2]));
        for_each_neighbour(z, y, x, s, Connectivity::k26, [&](int, int, int, std::size_t n) {
          if (ids[n] == id || seen[n]) return;
          seen[n] = 1;
          ++votes[snapshot[n]];
        });
      }
      if (votes.empty()) continue;
      int winner = votes.begin()->first;
      for (const auto& [cls, n] : votes)
        if (n > votes[winner]) winner = cls;
      for (std::size_t v : members[c]) out.labels[v] = static_cast<std::uint8_t>(winner);
    }
  }

  for (int k = 1; k < task.num_classes(); ++k) {
    if (task.class_roles[static_cast<std::size_t>(k)] != ClassRole::kOrgan) continue;
    std::vector<std::uint8_t> mask(out.size());
    for (std::size_t v = 0; v < out.size(); ++v) mask[v] = out.labels[v] == k;
    const auto keep = largest_component(mask, s, Connectivity::k26);
    for (std::size_t v = 0; v < out.size(); ++v)
      if (mask[v] && !keep[v]) out.labels[v] = 0;
  }
  return out;
}

}  // namespace rog::inference
