#pragma once

#include "rog/core/tensor.hpp"
#include "rog/volumes/volume.hpp"

namespace rog::attacks {

enum class LossKind { kCrossEntropy, kDlr, kMargin };

const char* to_string(LossKind k);

// Voxel-aggregated losses on a (C, D, H, W) logit map against integer labels.
// All return the arithmetic mean over the voxels considered (every voxel, or
// only label != 0 when foreground_only) and, when grad is non-null, write
// d loss / d logits into it (resized to the logit shape).
struct LossOptions {
  bool foreground_only = false;
};

double voxel_ce_loss(const Tensor& logits, const volumes::LabelMask& labels, Tensor* grad = nullptr,
                     const LossOptions& opts = {});

// -(z_y - max_{i!=y} z_i) / (z_pi1 - z_pi3 + 1e-12); for two classes the
// unnormalised margin -(z_y - z_{1-y}).
double voxel_dlr_loss(const Tensor& logits, const volumes::LabelMask& labels, Tensor* grad = nullptr,
                      const LossOptions& opts = {});

// z_y - max_{i!=y} z_i, averaged; lower means closer to misclassification.
double voxel_margin_loss(const Tensor& logits, const volumes::LabelMask& labels, Tensor* grad = nullptr,
                         const LossOptions& opts = {});

// Mean over voxels with y != target of (z_target - z_y).
double target_margin(const Tensor& logits, const volumes::LabelMask& labels, int target, Tensor* grad = nullptr);

double evaluate_loss(LossKind kind, const Tensor& logits, const volumes::LabelMask& labels, Tensor* grad,
                     const LossOptions& opts = {});

}  // namespace rog::attacks
