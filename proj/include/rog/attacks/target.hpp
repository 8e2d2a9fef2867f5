#pragma once

#include <functional>

#include "rog/inference/tiling.hpp"
#include "rog/model/network.hpp"
#include "rog/volumes/preprocess.hpp"

namespace rog::attacks {

// Loss on a logit map; writes d loss / d logits when grad is non-null.
using LossFn = std::function<double(const Tensor& logits, Tensor* grad)>;

struct Evaluation {
  Tensor logits;
  double loss = 0.0;
  Tensor input_grad;  // d loss / d x, x in attack space
};

// What an attack sees: a map from an attack-space volume in [0, 1] to
// per-voxel logits, optionally with input gradients.
class SegmentationModel {
 public:
  virtual ~SegmentationModel() = default;
  virtual int num_classes() const = 0;
  virtual Tensor logits(const Tensor& x) const = 0;
  virtual bool differentiable() const { return false; }
  // Throws a capability error unless differentiable().
  virtual Evaluation evaluate(const Tensor& x, const LossFn& loss) const;
};

// A network applied to a whole volume through the tiling of the inference
// module. Patch logits are fused with the distance weights and gradients flow
// back through the same weights and the attack-space affine map.
class NetworkTarget final : public SegmentationModel {
 public:
  NetworkTarget(const model::RogNet& net, volumes::AffineMap map, const Index3& volume_shape, double overlap = 0.5);

  int num_classes() const override;
  Tensor logits(const Tensor& x) const override;
  bool differentiable() const override { return true; }
  Evaluation evaluate(const Tensor& x, const LossFn& loss) const override;

  const inference::TilePlan& plan() const { return plan_; }

 private:
  const model::RogNet& net_;
  volumes::AffineMap map_;
  inference::TilePlan plan_;
  std::vector<Tensor> shares_;
};

// Hides the gradient of another model; used to check that score-based
// attacks never ask for one.
class ScoreOnlyModel final : public SegmentationModel {
 public:
  explicit ScoreOnlyModel(const SegmentationModel& inner) : inner_(inner) {}
  int num_classes() const override { return inner_.num_classes(); }
  Tensor logits(const Tensor& x) const override { return inner_.logits(x); }

 private:
  const SegmentationModel& inner_;
};

}  // namespace rog::attacks
