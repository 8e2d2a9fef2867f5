#include "rog/inference/predict.hpp"

#include <cmath>

#include "rog/core/error.hpp"
#include "rog/inference/components.hpp"
#include "rog/inference/tiling.hpp"

namespace rog::inference {

Tensor softmax(const Tensor& logits) {
  Tensor p(logits.shape());
  const int c = logits.channels();
  const std::size_t n = logits.plane();
  for (std::size_t v = 0; v < n; ++v) {
    float m = logits[v];
    for (int k = 1; k < c; ++k) m = std::max(m, logits[k * n + v]);
    double z = 0.0;
    for (int k = 0; k < c; ++k) z += std::exp(static_cast<double>(logits[k * n + v] - m));
    for (int k = 0; k < c; ++k) p[k * n + v] = static_cast<float>(std::exp(static_cast<double>(logits[k * n + v] - m)) / z);
  }
  return p;
}

volumes::LabelMask argmax_labels(const Tensor& scores) {
  const int c = scores.channels();
  require(c >= 1 && c <= 255, ErrorKind::kInvalidArgument, "unsupported class count");
  volumes::LabelMask out(scores.spatial(), c);
  const std::size_t n = scores.plane();
  for (std::size_t v = 0; v < n; ++v) {
    int best = 0;
    for (int k = 1; k < c; ++k)
      if (scores[k * n + v] > scores[best * n + v]) best = k;
    out.labels[v] = static_cast<std::uint8_t>(best);
  }
  return out;
}

Tensor predict_probabilities(const model::RogNet& net, const Tensor& image, double overlap) {
  const auto& cfg = net.config();
  require(image.channels() == cfg.in_channels, ErrorKind::kInvalidArgument, "channel count does not match model");
  const TilePlan plan = plan_tiles(image.spatial(), cfg.patch_size, overlap);
  std::vector<Tensor> probs;
  probs.reserve(plan.offsets.size());
  for (const auto& o : plan.offsets) probs.push_back(softmax(net.forward(extract_patch(image, plan, o))));
  return fuse_predictions(probs, plan);
}

volumes::LabelMask predict_case(const model::RogNet& net, const volumes::Volume& image, const volumes::TaskSpec& task,
                                const PredictOptions& opts) {
  require(task.num_classes() == net.config().num_classes, ErrorKind::kInvalidArgument,
          "task and model disagree on classes");
  auto labels = argmax_labels(predict_probabilities(net, image.data, opts.overlap));
  if (opts.postprocess) labels = fuse_small_components(labels, task, opts.threshold_fraction);
  return labels;
}

}  // namespace rog::inference
