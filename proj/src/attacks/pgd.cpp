#include <random>

#include "common.hpp"
#include "rog/core/error.hpp"

namespace rog::attacks {

namespace {

float sign(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

AttackResult pgd_once(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                      const volumes::TaskSpec& task, const AttackConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  const float eps = static_cast<float>(cfg.eps);
  const float eta = eps / 4.0f;
  const LossFn loss = [&](const Tensor& z, Tensor* g) { return voxel_ce_loss(z, y, g, cfg.loss_options); };

  Tensor x = x0;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += eps * u(rng);
  project(x, x0, cfg.eps);

  Evaluation ev = model.evaluate(x, loss);
  int evals = 1;
  double best_loss = ev.loss;
  Tensor best_x = x, best_logits = ev.logits;
  double best_dice = detail::dice_of(ev.logits, y).mean;
  std::vector<double> trace;

  for (int k = 0; k < cfg.iterations; ++k) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += eta * sign(ev.input_grad[i]);
    project(x, x0, cfg.eps);
    const bool last = k + 1 == cfg.iterations;
    if (last) {
      ev.logits = model.logits(x);
      ev.loss = voxel_ce_loss(ev.logits, y, nullptr, cfg.loss_options);
    } else {
      ev = model.evaluate(x, loss);
    }
    ++evals;
    best_loss = std::max(best_loss, ev.loss);
    trace.push_back(best_loss);
    const double d = detail::dice_of(ev.logits, y).mean;
    if (d < best_dice) {
      best_dice = d;
      best_x = x;
      best_logits = ev.logits;
    }
  }
  AttackResult r = detail::finish("PGD", best_x, x0, best_logits, y, task, evals);
  r.loss_trace = std::move(trace);
  return r;
}

}  // namespace

AttackResult pgd_attack(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                        const volumes::TaskSpec& task, const AttackConfig& cfg) {
  detail::check_inputs(model, x0, y, cfg);
  require(model.differentiable(), ErrorKind::kCapability, "PGD needs input gradients");
  AttackResult best;
  int evals = 0;
  for (int r = 0; r < cfg.restarts; ++r) {
    AttackResult cur = pgd_once(model, x0, y, task, cfg, cfg.seed + static_cast<std::uint64_t>(r));
    evals += cur.evaluations;
    if (r == 0 || cur.dice.mean < best.dice.mean) best = std::move(cur);
  }
  best.evaluations = evals;
  return best;
}

}  // namespace rog::attacks
