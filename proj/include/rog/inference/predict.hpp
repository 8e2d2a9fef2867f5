#pragma once

#include "rog/model/network.hpp"
#include "rog/volumes/volume.hpp"

namespace rog::inference {

struct PredictOptions {
  double overlap = 0.5;
  bool postprocess = true;
  double threshold_fraction = 0.1;
};

// Channel-wise softmax of a (C, D, H, W) logit map.
Tensor softmax(const Tensor& logits);

// Per-voxel argmax over channels; ties resolve to the lower class index.
volumes::LabelMask argmax_labels(const Tensor& scores);

// Tiled forward passes fused into a (C, volume) probability map.
Tensor predict_probabilities(const model::RogNet& net, const Tensor& image, double overlap = 0.5);

volumes::LabelMask predict_case(const model::RogNet& net, const volumes::Volume& image,
                                const volumes::TaskSpec& task, const PredictOptions& opts = {});

}  // namespace rog::inference
