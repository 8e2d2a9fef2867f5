#pragma once

#include <map>
#include <string>
#include <vector>

#include "rog/volumes/volume.hpp"

namespace rog::metrics {

using volumes::LabelMask;
using volumes::TaskSpec;

struct DiceReport {
  std::map<int, double> per_class;  // foreground classes only
  double mean = 0.0;
};

// 2|A∩B| / (|A| + |B|); 1.0 when both sets are empty.
double dice(const LabelMask& pred, const LabelMask& gt, int class_id);

// Dice for every foreground class of gt.num_classes.
DiceReport dice_report(const LabelMask& pred, const LabelMask& gt);

// d < mu/2, strict. Throws missing-reference when mu is unset.
bool attack_success(double dice_mean, const TaskSpec& task);

struct RobustSummary {
  std::map<std::string, double> per_attack_dice;  // mean over cases
  std::vector<double> worst_case_per_case;
  double robust_accuracy = 0.0;
};

// results[case][attack] -> report; every case must cover the same attacks.
RobustSummary aggregate_robust(const std::vector<std::map<std::string, DiceReport>>& results,
                               const TaskSpec& task);

// Trapezoidal area under Dice(eps) normalised by the eps range.
double auc_dice_epsilon(const std::vector<std::pair<double, double>>& points);

}  // namespace rog::metrics
