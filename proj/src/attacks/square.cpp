#include <algorithm>
#include <cmath>
#include <random>

#include "common.hpp"

namespace rog::attacks {

double square_fraction(double p_init, int q, int n) {
  const int it = n > 0 ? static_cast<int>(static_cast<double>(q) / n * 10000.0) : 0;
  static constexpr int kMilestones[] = {10, 50, 200, 500, 1000, 2000, 4000, 6000, 8000};
  double p = p_init;
  for (int m : kMilestones)
    if (it > m) p /= 2.0;
  return p;
}

AttackResult square_attack(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                           const volumes::TaskSpec& task, const AttackConfig& cfg) {
  detail::check_inputs(model, x0, y, cfg);
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution coin(0.5);
  const float eps = static_cast<float>(cfg.eps);
  const Index3 s = x0.spatial();
  const int channels = x0.channels();

  Tensor x = x0;
  for (int c = 0; c < channels; ++c)
    for (int w = 0; w < s[2]; ++w) {
      const float v = coin(rng) ? eps : -eps;
      for (int z = 0; z < s[0]; ++z)
        for (int h = 0; h < s[1]; ++h) x.at(c, z, h, w) += v;
    }
  project(x, x0, cfg.eps);

  Tensor logits = model.logits(x);
  double best = voxel_margin_loss(logits, y, nullptr, cfg.loss_options);
  int evals = 1;
  std::vector<double> trace{best};

  const int min_edge = std::min({s[0], s[1], s[2]});
  const double volume = static_cast<double>(voxel_count(s));
  for (int q = 0; evals < cfg.queries; ++q) {
    const double p = square_fraction(cfg.square_p_init, q, cfg.queries);
    int side = static_cast<int>(std::lround(std::cbrt(p * volume)));
    side = std::clamp(side, 1, std::max(1, min_edge - 1));
    const int oz = std::uniform_int_distribution<int>(0, s[0] - side)(rng);
    const int oy = std::uniform_int_distribution<int>(0, s[1] - side)(rng);
    const int ox = std::uniform_int_distribution<int>(0, s[2] - side)(rng);

    Tensor cand = x;
    for (int attempt = 0; attempt < 10; ++attempt) {
      bool changed = false;
      for (int c = 0; c < channels; ++c) {
        const float v = coin(rng) ? eps : -eps;
        for (int z = oz; z < oz + side; ++z)
          for (int h = oy; h < oy + side; ++h)
            for (int w = ox; w < ox + side; ++w) {
              const float nv = std::clamp(x0.at(c, z, h, w) + v, 0.0f, 1.0f);
              changed = changed || std::abs(nv - x.at(c, z, h, w)) > 1e-7f;
              cand.at(c, z, h, w) = nv;
            }
      }
      if (changed) break;
    }

    Tensor z = model.logits(cand);
    ++evals;
    const double l = voxel_margin_loss(z, y, nullptr, cfg.loss_options);
    if (l < best) {
      best = l;
      x = std::move(cand);
      logits = std::move(z);
      trace.push_back(best);
    }
  }
  AttackResult r = detail::finish("Square", x, x0, logits, y, task, evals);
  r.loss_trace = std::move(trace);
  return r;
}

}  // namespace rog::attacks
