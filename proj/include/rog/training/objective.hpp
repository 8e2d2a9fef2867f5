#pragma once

#include "rog/core/tensor.hpp"
#include "rog/volumes/volume.hpp"

namespace rog::training {

inline constexpr double kDiceSmooth = 1e-5;

struct LossTerms {
  double dice = 0.0;  // 1 - mean soft Dice over foreground classes
  double ce = 0.0;
  double total() const { return dice + ce; }
};

// Soft Dice + voxel-mean cross-entropy on a single (C, D, H, W) sample.
// Writes d total / d logits into grad when non-null.
LossTerms combined_loss(const Tensor& logits, const volumes::LabelMask& labels, Tensor* grad = nullptr);

}  // namespace rog::training
