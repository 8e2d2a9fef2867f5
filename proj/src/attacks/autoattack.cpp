#include "rog/attacks/autoattack.hpp"

#include "rog/core/error.hpp"

namespace rog::attacks {

EnsembleResult run_autoattack(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                              const volumes::TaskSpec& task, const AttackConfig& cfg, bool early_exit) {
  require(task.clean_mean_dice.has_value(), ErrorKind::kMissingReference, "ensemble needs the clean reference Dice");
  EnsembleResult out;
  auto add = [&](AttackResult r) {
    if (out.attacks.empty() || r.dice.mean < out.worst.mean) {
      out.worst = r.dice;
      out.worst_attack = r.attack;
    }
    out.broken = out.broken || r.success;
    out.attacks.push_back(std::move(r));
    return early_exit && out.broken;
  };

  AttackConfig c = cfg;
  c.loss = LossKind::kCrossEntropy;
  if (add(apgd_attack(model, x0, y, task, c))) return out;
  c.loss = LossKind::kDlr;
  if (add(apgd_attack(model, x0, y, task, c))) return out;
  if (add(fab_t_attack(model, x0, y, task, cfg))) return out;
  add(square_attack(model, x0, y, task, cfg));
  return out;
}

}  // namespace rog::attacks
