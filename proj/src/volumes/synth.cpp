#include "rog/volumes/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rog/core/error.hpp"

namespace rog::volumes {

namespace {

bool inside_ellipsoid(const Vec3& p, const Vec3& c, const Vec3& r) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = (p[a] - c[a]) / r[a];
    s += d * d;
  }
  return s <= 1.0;
}

}  // namespace

std::tuple<Volume, LabelMask, TaskSpec> synth_case(std::uint64_t seed, const SynthConfig& cfg) {
  for (int a = 0; a < 3; ++a)
    require(cfg.shape[a] >= 16, ErrorKind::kInvalidConfig, "synthetic volumes need >= 16 voxels per axis");
  require(cfg.channels >= 1, ErrorKind::kInvalidConfig, "synthetic volumes need >= 1 channel");
  require(cfg.organ_radius_min > 0.0 && cfg.organ_radius_min <= cfg.organ_radius_max &&
              cfg.organ_radius_max <= 1.0,
          ErrorKind::kInvalidConfig, "organ radius fractions must satisfy 0 < min <= max <= 1");
  require(cfg.speckle_fraction >= 0.0 && cfg.speckle_fraction <= 1.0, ErrorKind::kInvalidConfig,
          "speckle fraction must lie in [0, 1]");
  const int num_classes = cfg.tumor ? 3 : 2;
  require(static_cast<int>(cfg.class_means.size()) >= num_classes, ErrorKind::kInvalidConfig,
          "class_means needs one entry per class");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Vec3 center{}, radius{};
  for (int a = 0; a < 3; ++a) {
    const double half = cfg.shape[a] / 2.0;
    radius[a] = half * (cfg.organ_radius_min + (cfg.organ_radius_max - cfg.organ_radius_min) * unit(rng));
    const double slack = std::max(0.0, half - radius[a] - 1.0);
    center[a] = half - 0.5 + (2.0 * unit(rng) - 1.0) * slack;
  }

  LabelMask mask(cfg.shape, num_classes);
  for (int z = 0; z < cfg.shape[0]; ++z)
    for (int y = 0; y < cfg.shape[1]; ++y)
      for (int x = 0; x < cfg.shape[2]; ++x)
        if (inside_ellipsoid({double(z), double(y), double(x)}, center, radius)) mask.at(z, y, x) = 1;

  if (cfg.tumor) {
    const double min_organ = *std::min_element(radius.begin(), radius.end());
    require(cfg.tumor_radius_max > 0.0 && cfg.tumor_radius_min <= cfg.tumor_radius_max,
            ErrorKind::kInvalidConfig, "tumor radius range is empty");
    require(cfg.tumor_radius_max + 1.0 < min_organ, ErrorKind::kInvalidConfig,
            "tumor radius exceeds the organ");
    const double r = cfg.tumor_radius_min + (cfg.tumor_radius_max - cfg.tumor_radius_min) * unit(rng);

    auto organ_interior = [&](int z, int y, int x) {
      static constexpr int kOff[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
      if (mask.at(z, y, x) == 0) return false;
      for (const auto& o : kOff) {
        const int zz = z + o[0], yy = y + o[1], xx = x + o[2];
        if (zz < 0 || yy < 0 || xx < 0 || zz >= cfg.shape[0] || yy >= cfg.shape[1] || xx >= cfg.shape[2])
          return false;
        if (mask.at(zz, yy, xx) == 0) return false;
      }
      return true;
    };

    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      Vec3 tc{};
      for (int a = 0; a < 3; ++a) tc[a] = center[a] + (2.0 * unit(rng) - 1.0) * (radius[a] - r - 1.0);
      std::vector<std::size_t> voxels;
      bool ok = true;
      for (int z = 0; z < cfg.shape[0] && ok; ++z)
        for (int y = 0; y < cfg.shape[1] && ok; ++y)
          for (int x = 0; x < cfg.shape[2] && ok; ++x) {
            const double dz = z - tc[0], dy = y - tc[1], dx = x - tc[2];
            if (dz * dz + dy * dy + dx * dx > r * r) continue;
            if (!organ_interior(z, y, x)) ok = false;
            voxels.push_back((static_cast<std::size_t>(z) * cfg.shape[1] + y) * cfg.shape[2] + x);
          }
      if (ok && !voxels.empty()) {
        for (auto i : voxels) mask.labels[i] = 2;
        placed = true;
      }
    }
    require(placed, ErrorKind::kInvalidConfig, "could not place the tumor inside the organ");
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor data(cfg.channels, cfg.shape);
  for (int c = 0; c < cfg.channels; ++c) {
    float* dst = data.channel(c);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      const double mean = cfg.class_means[mask.labels[i]] + c * cfg.channel_offset;
      dst[i] = static_cast<float>(mean + cfg.noise * gauss(rng));
    }
  }
  if (cfg.speckle_fraction > 0.0) {
    std::bernoulli_distribution hit(cfg.speckle_fraction);
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask.labels[i] == 1 && hit(rng))
        for (int c = 0; c < cfg.channels; ++c) data.channel(c)[i] += static_cast<float>(cfg.speckle_amplitude);
  }

  TaskSpec task;
  task.name = "synthetic";
  task.modality = Modality::kCT;
  task.class_roles = {ClassRole::kBackground, ClassRole::kOrgan};
  if (cfg.tumor) task.class_roles.push_back(ClassRole::kTumor);
  task.avg_object_voxels.assign(static_cast<std::size_t>(num_classes), 0.0);
  for (int k = 1; k < num_classes; ++k) task.avg_object_voxels[static_cast<std::size_t>(k)] = double(mask.count(k));

  return {Volume(std::move(data), cfg.spacing), std::move(mask), std::move(task)};
}

}  // namespace rog::volumes
