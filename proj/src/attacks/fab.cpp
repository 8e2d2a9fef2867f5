#include <algorithm>
#include <cmath>
#include <limits>

#include "common.hpp"
#include "rog/core/error.hpp"

namespace rog::attacks {

Tensor linf_hyperplane_step(const Tensor& grad, double g) {
  Tensor d(grad.shape());
  double l1 = 0.0;
  for (float v : grad.values()) l1 += std::abs(v);
  if (l1 <= 0.0) return d;
  const double s = -g / l1;
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = grad[i] > 0.0f ? static_cast<float>(s) : (grad[i] < 0.0f ? static_cast<float>(-s) : 0.0f);
  return d;
}

namespace {

int dominant_foreground(const volumes::LabelMask& y) {
  int best = -1;
  std::size_t best_n = 0;
  for (int k = 1; k < y.num_classes; ++k) {
    const std::size_t n = y.count(k);
    if (best < 0 || n > best_n) {
      best = k;
      best_n = n;
    }
  }
  return best;
}

}  // namespace

AttackResult fab_t_attack(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                          const volumes::TaskSpec& task, const AttackConfig& cfg) {
  detail::check_inputs(model, x0, y, cfg);
  require(model.differentiable(), ErrorKind::kCapability, "FAB-T needs input gradients");
  require(task.clean_mean_dice.has_value(), ErrorKind::kMissingReference, "FAB-T needs the clean reference Dice");

  const int skip = dominant_foreground(y);
  int evals = 0;
  double best_norm = std::numeric_limits<double>::infinity();
  Tensor best_delta;
  std::vector<double> trace;

  for (int t = 0; t < y.num_classes; ++t) {
    if (t == skip) continue;
    const LossFn margin = [&](const Tensor& z, Tensor* g) { return target_margin(z, y, t, g); };
    Tensor x = x0;
    for (int k = 0; k <= cfg.iterations; ++k) {
      const bool last = k == cfg.iterations;
      Evaluation ev;
      if (last) {
        ev.logits = model.logits(x);
      } else {
        ev = model.evaluate(x, margin);
      }
      ++evals;
      if (k > 0 && detail::is_success(detail::dice_of(ev.logits, y).mean, task)) {
        const double norm = (x - x0).max_abs();
        if (norm < best_norm) {
          best_norm = norm;
          best_delta = x - x0;
        }
        trace.push_back(best_norm);
        const float beta = static_cast<float>(cfg.fab_beta);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0[i] + beta * (x[i] - x0[i]);
        continue;
      }
      if (last) break;

      const Tensor& w = ev.input_grad;
      const Tensor d1 = linf_hyperplane_step(w, ev.loss);
      double shift = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) shift += static_cast<double>(w[i]) * (x0[i] - x[i]);
      const Tensor d2 = linf_hyperplane_step(w, ev.loss + shift);
      const double a0 = d1.max_abs(), a1 = d2.max_abs();
      const double alpha = a0 + a1 > 0.0 ? std::min(a0 / (a0 + a1), cfg.fab_alpha_max) : 0.0;
      const float al = static_cast<float>(alpha);
      for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::clamp((1.0f - al) * (x[i] + d1[i]) + al * (x0[i] + d2[i]), 0.0f, 1.0f);
    }
  }

  // The minimal successful perturbation is brought back into the eps-ball;
  // when that no longer fools the model the clean input is reported.
  Tensor out = x0;
  Tensor logits;
  if (!best_delta.empty()) {
    Tensor cand = x0 + best_delta;
    project(cand, x0, cfg.eps);
    Tensor z = model.logits(cand);
    ++evals;
    if (detail::is_success(detail::dice_of(z, y).mean, task)) {
      out = std::move(cand);
      logits = std::move(z);
    }
  }
  if (logits.empty()) {
    logits = model.logits(out);
    ++evals;
  }
  AttackResult r = detail::finish("FAB-T", out, x0, logits, y, task, evals);
  r.loss_trace = std::move(trace);
  return r;
}

}  // namespace rog::attacks
