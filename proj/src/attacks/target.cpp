#include "rog/attacks/target.hpp"

#include "rog/core/error.hpp"

namespace rog::attacks {

Evaluation SegmentationModel::evaluate(const Tensor&, const LossFn&) const {
  throw Error(ErrorKind::kCapability, "model does not expose input gradients");
}

NetworkTarget::NetworkTarget(const model::RogNet& net, volumes::AffineMap map, const Index3& volume_shape,
                             double overlap)
    : net_(net), map_(std::move(map)) {
  require(static_cast<int>(map_.lo.size()) == net.config().in_channels, ErrorKind::kInvalidArgument,
          "affine map does not match the model's input channels");
  plan_ = inference::plan_tiles(volume_shape, net.config().patch_size, overlap);
  shares_ = inference::fusion_shares(plan_);
}

int NetworkTarget::num_classes() const { return net_.config().num_classes; }

Tensor NetworkTarget::logits(const Tensor& x) const {
  require(x.spatial() == plan_.volume_shape, ErrorKind::kInvalidArgument, "volume shape differs from the plan");
  const Tensor m = map_.from_unit(x);
  std::vector<Tensor> maps;
  maps.reserve(plan_.offsets.size());
  for (const auto& o : plan_.offsets) maps.push_back(net_.forward(inference::extract_patch(m, plan_, o)));
  return inference::fuse_predictions(maps, plan_);
}

Evaluation NetworkTarget::evaluate(const Tensor& x, const LossFn& loss) const {
  require(x.spatial() == plan_.volume_shape, ErrorKind::kInvalidArgument, "volume shape differs from the plan");
  const Tensor m = map_.from_unit(x);
  const std::size_t n = plan_.offsets.size();
  std::vector<Tensor> maps;
  std::vector<model::Tape> tapes(n);
  maps.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    maps.push_back(net_.forward(inference::extract_patch(m, plan_, plan_.offsets[i]), &tapes[i]));

  Evaluation ev;
  ev.logits = inference::fuse_predictions(maps, plan_);
  Tensor g_logits;
  ev.loss = loss(ev.logits, &g_logits);

  ev.input_grad = Tensor(x.shape());
  const Index3 vs = plan_.volume_shape, ps = plan_.patch_size;
  const int classes = ev.logits.channels();
  for (std::size_t i = 0; i < n; ++i) {
    const Index3& o = plan_.offsets[i];
    Tensor gp(classes, ps);
    for (int c = 0; c < classes; ++c)
      for (int z = 0; z < ps[0]; ++z)
        for (int y = 0; y < ps[1]; ++y)
          for (int xx = 0; xx < ps[2]; ++xx) {
            const int vz = o[0] + z, vy = o[1] + y, vx = o[2] + xx;
            if (vz >= vs[0] || vy >= vs[1] || vx >= vs[2]) continue;
            gp.at(c, z, y, xx) = shares_[i].at(0, z, y, xx) * g_logits.at(c, vz, vy, vx);
          }
    const Tensor gx = net_.backward(gp, tapes[i], nullptr, true);
    inference::scatter_patch(ev.input_grad, gx, plan_, o);
  }
  for (int c = 0; c < x.channels(); ++c) {
    const float s = static_cast<float>(map_.scale(c));
    float* g = ev.input_grad.channel(c);
    for (std::size_t v = 0; v < x.plane(); ++v) g[v] *= s;
  }
  return ev;
}

}  // namespace rog::attacks
