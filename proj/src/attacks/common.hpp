#pragma once

#include "rog/attacks/attack.hpp"

namespace rog::attacks::detail {

// Builds the reported fields from a final iterate and its logits.
AttackResult finish(std::string name, const Tensor& x, const Tensor& x0, const Tensor& logits,
                    const volumes::LabelMask& y, const volumes::TaskSpec& task, int evaluations);

metrics::DiceReport dice_of(const Tensor& logits, const volumes::LabelMask& y);

bool is_success(double dice_mean, const volumes::TaskSpec& task);

void check_inputs(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                  const AttackConfig& cfg);

}  // namespace rog::attacks::detail
