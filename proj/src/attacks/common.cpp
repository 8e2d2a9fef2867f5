#include "common.hpp"

#include <algorithm>

#include "rog/core/error.hpp"
#include "rog/inference/predict.hpp"

namespace rog::attacks {

void AttackConfig::validate() const {
  require(eps >= 0.0 && eps <= 1.0, ErrorKind::kInvalidConfig, "eps must lie in [0, 1]");
  require(iterations >= 1 || queries >= 1, ErrorKind::kInvalidConfig, "iterations or queries must be positive");
  require(iterations >= 0 && queries >= 0, ErrorKind::kInvalidConfig, "negative budget");
  require(restarts >= 1, ErrorKind::kInvalidConfig, "restarts must be at least 1");
  require(fab_alpha_max >= 0.0 && fab_alpha_max <= 1.0, ErrorKind::kInvalidConfig, "fab alpha_max must lie in [0, 1]");
  require(fab_beta > 0.0 && fab_beta <= 1.0, ErrorKind::kInvalidConfig, "fab beta must lie in (0, 1]");
  require(square_p_init > 0.0 && square_p_init <= 1.0, ErrorKind::kInvalidConfig, "square p_init must lie in (0, 1]");
}

void project(Tensor& x, const Tensor& x0, double eps) {
  const float e = static_cast<float>(eps);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float lo = std::max(0.0f, x0[i] - e), hi = std::min(1.0f, x0[i] + e);
    x[i] = std::clamp(x[i], lo, hi);
  }
}

namespace detail {

metrics::DiceReport dice_of(const Tensor& logits, const volumes::LabelMask& y) {
  auto pred = inference::argmax_labels(logits);
  pred.num_classes = y.num_classes;
  return metrics::dice_report(pred, y);
}

bool is_success(double dice_mean, const volumes::TaskSpec& task) {
  return task.clean_mean_dice.has_value() && metrics::attack_success(dice_mean, task);
}

AttackResult finish(std::string name, const Tensor& x, const Tensor& x0, const Tensor& logits,
                    const volumes::LabelMask& y, const volumes::TaskSpec& task, int evaluations) {
  AttackResult r;
  r.attack = std::move(name);
  r.adversarial = x;
  r.delta = x - x0;
  r.dice = dice_of(logits, y);
  r.success = is_success(r.dice.mean, task);
  r.evaluations = evaluations;
  return r;
}

void check_inputs(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                  const AttackConfig& cfg) {
  cfg.validate();
  require(x0.rank() == 4 && x0.spatial() == y.shape, ErrorKind::kInvalidArgument, "volume and labels differ in shape");
  require(y.num_classes == model.num_classes(), ErrorKind::kInvalidArgument, "labels and model differ in classes");
  for (float v : x0.values())
    require(v >= 0.0f && v <= 1.0f, ErrorKind::kInvalidArgument, "input lies outside the [0, 1] attack box");
}

}  // namespace detail
}  // namespace rog::attacks
