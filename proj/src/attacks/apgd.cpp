#include <algorithm>
#include <random>

#include "common.hpp"
#include "rog/core/error.hpp"

namespace rog::attacks {

std::vector<int> apgd_checkpoints(int n_iter) {
  require(n_iter >= 1, ErrorKind::kInvalidArgument, "n_iter must be positive");
  // Fractions are kept in hundredths so the recursion is exact.
  std::vector<int> out;
  long prev = 0, cur = 22;
  out.push_back(0);
  while (cur < 100) {
    const int w = static_cast<int>((cur * n_iter + 99) / 100);
    if (w < n_iter && w > out.back()) out.push_back(w);
    const long next = cur + std::max(cur - prev - 3, 6L);
    prev = cur;
    cur = next;
  }
  return out;
}

namespace {

float sign(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

const char* apgd_name(LossKind k) {
  switch (k) {
    case LossKind::kCrossEntropy: return "APGD-CE";
    case LossKind::kDlr: return "APGD-DLR";
    case LossKind::kMargin: return "APGD-margin";
  }
  return "APGD";
}

AttackResult apgd_once(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                       const volumes::TaskSpec& task, const AttackConfig& cfg, std::uint64_t seed) {
  const LossFn loss = [&](const Tensor& z, Tensor* g) { return evaluate_loss(cfg.loss, z, y, g, cfg.loss_options); };
  const std::vector<int> checks = apgd_checkpoints(cfg.iterations);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor t(x0.shape());
  for (float& v : t.values()) v = u(rng);
  const float tmax = std::max(t.max_abs(), 1e-12f);
  Tensor x = x0;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += static_cast<float>(cfg.eps) * t[i] / tmax;
  project(x, x0, cfg.eps);

  Evaluation ev = model.evaluate(x, loss);
  int evals = 1;
  double f_prev = ev.loss;
  double best_f = ev.loss;
  Tensor x_best = x, g_best = ev.input_grad;

  Tensor dice_x = x, dice_logits = ev.logits;
  double dice_best = detail::dice_of(ev.logits, y).mean;

  double eta = 2.0 * cfg.eps;
  Tensor x_prev = x;
  Tensor grad = ev.input_grad;
  int increases = 0, last_check = 0;
  double best_at_check = best_f;
  bool reduced_last = true;
  std::size_t next_check = 1;
  std::vector<double> trace;

  for (int k = 0; k < cfg.iterations; ++k) {
    const float a = k == 0 ? 1.0f : 0.75f;
    const float e = static_cast<float>(eta);
    Tensor z = x;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += e * sign(grad[i]);
    project(z, x0, cfg.eps);
    Tensor x_new = x;
    for (std::size_t i = 0; i < x.size(); ++i) x_new[i] = x[i] + a * (z[i] - x[i]) + (1.0f - a) * (x[i] - x_prev[i]);
    project(x_new, x0, cfg.eps);
    x_prev = std::move(x);
    x = std::move(x_new);

    ev = model.evaluate(x, loss);
    ++evals;
    grad = ev.input_grad;
    if (ev.loss > f_prev) ++increases;
    f_prev = ev.loss;
    if (ev.loss > best_f) {
      best_f = ev.loss;
      x_best = x;
      g_best = grad;
    }
    trace.push_back(best_f);
    const double d = detail::dice_of(ev.logits, y).mean;
    if (d < dice_best) {
      dice_best = d;
      dice_x = x;
      dice_logits = ev.logits;
    }

    if (next_check < checks.size() && k + 1 == checks[next_check]) {
      const int steps = k + 1 - last_check;
      const bool few_increases = increases < 0.75 * steps;
      const bool stalled = !reduced_last && best_f <= best_at_check;
      reduced_last = few_increases || stalled;
      if (reduced_last) {
        eta /= 2.0;
        x = x_best;
        grad = g_best;
      }
      increases = 0;
      last_check = k + 1;
      best_at_check = best_f;
      ++next_check;
    }
  }
  AttackResult r = detail::finish(apgd_name(cfg.loss), dice_x, x0, dice_logits, y, task, evals);
  r.loss_trace = std::move(trace);
  return r;
}

}  // namespace

AttackResult apgd_attack(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                         const volumes::TaskSpec& task, const AttackConfig& cfg) {
  detail::check_inputs(model, x0, y, cfg);
  require(cfg.loss == LossKind::kCrossEntropy || cfg.loss == LossKind::kDlr, ErrorKind::kInvalidConfig,
          "APGD runs on the cross-entropy or DLR loss");
  require(cfg.iterations >= 1, ErrorKind::kInvalidConfig, "APGD needs at least one iteration");
  require(model.differentiable(), ErrorKind::kCapability, "APGD needs input gradients");
  AttackResult best;
  int evals = 0;
  for (int r = 0; r < cfg.restarts; ++r) {
    AttackResult cur = apgd_once(model, x0, y, task, cfg, cfg.seed + static_cast<std::uint64_t>(r));
    evals += cur.evaluations;
    if (r == 0 || cur.dice.mean < best.dice.mean) best = std::move(cur);
  }
  best.evaluations = evals;
  return best;
}

}  // namespace rog::attacks
