#pragma once

#include "rog/attacks/attack.hpp"

namespace rog::attacks {

inline constexpr const char* kEnsembleOrder[] = {"APGD-CE", "APGD-DLR", "FAB-T", "Square"};

struct EnsembleResult {
  std::vector<AttackResult> attacks;  // in ensemble order; shorter on early exit
  metrics::DiceReport worst;          // report with the lowest mean Dice
  std::string worst_attack;
  bool broken = false;                // any attack succeeded
};

// APGD-CE, APGD-DLR, FAB-T and Square on one case. cfg.loss is ignored.
EnsembleResult run_autoattack(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                              const volumes::TaskSpec& task, const AttackConfig& cfg, bool early_exit = false);

}  // namespace rog::attacks
