#include "rog/model/network.hpp"

#include <random>
#include <string>

#include "rog/core/error.hpp"

namespace rog::model {

RogNet::RogNet(LatticeConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  nodes_ = lattice_nodes(cfg_);
  std::mt19937_64 rng(cfg_.init_seed);
  const int w0 = cfg_.widths[0];

  for (int i = 0; i < 4; ++i) {
    Index3 stride{1, 1, 1};
    for (int a = 0; a < 3; ++a) {
      // factor 2 -> stride on the first conv; factor 4 -> first two convs
      const int f = cfg_.initial_factors[static_cast<std::size_t>(a)];
      if ((f == 2 && i == 0) || (f == 4 && i < 2)) stride[static_cast<std::size_t>(a)] = 2;
    }
    const std::string name = "initial." + std::to_string(i);
    const int in = i == 0 ? cfg_.in_channels : w0;
    stem_.push_back({in, Conv3d(params_, name + ".conv", in, w0, 3, stride, false, rng),
                     InstanceNorm(params_, name + ".norm", w0)});
  }

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const NodeSpec& spec = nodes_[i];
    const std::string name = "node." + std::to_string(spec.scale) + "." + std::to_string(spec.column);
    const int w = spec.width;
    Node n;
    for (const auto& e : spec.inputs) {
      const int src_w = nodes_[static_cast<std::size_t>(e.source)].width;
      Edge edge{e.kind, e.source, {}};
      if (e.kind == EdgeKind::kFromFiner)
        edge.conv = Conv3d(params_, name + ".down_from." + std::to_string(e.source), src_w, w, 1, {2, 2, 2}, false, rng);
      else if (e.kind == EdgeKind::kFromCoarser)
        edge.conv = Conv3d(params_, name + ".up_from." + std::to_string(e.source), src_w, w, 1, {1, 1, 1}, false, rng);
      n.edges.push_back(std::move(edge));
    }
    n.dw1 = DepthwiseConv3d(params_, name + ".sep1.depthwise", w, rng);
    n.pw1 = Conv3d(params_, name + ".sep1.pointwise", w, w, 1, {1, 1, 1}, false, rng);
    n.in1 = InstanceNorm(params_, name + ".norm1", w);
    n.dw2 = DepthwiseConv3d(params_, name + ".sep2.depthwise", w, rng);
    n.pw2 = Conv3d(params_, name + ".sep2.pointwise", w, w, 1, {1, 1, 1}, false, rng);
    n.in2 = InstanceNorm(params_, name + ".norm2", w);
    n.shortcut = Conv3d(params_, name + ".shortcut", w, w, 1, {1, 1, 1}, false, rng);
    lattice_.push_back(std::move(n));
  }

  head_ = {w0, Conv3d(params_, "head.conv", w0, w0, 3, {1, 1, 1}, false, rng), InstanceNorm(params_, "head.norm", w0)};
  classifier_ = Conv3d(params_, "head.classifier", w0, cfg_.num_classes, 1, {1, 1, 1}, true, rng);
}

std::vector<Index3> RogNet::scale_shapes() const {
  std::vector<Index3> s;
  for (int i = 0; i < cfg_.num_scales; ++i) s.push_back(cfg_.scale_shape(i));
  return s;
}

Tensor RogNet::node_forward(const Node& n, const Tensor& x, Tape* tape) const {
  Tensor h = n.dw1.forward(params_, x, tape);
  h = n.pw1.forward(params_, h, tape);
  h = n.in1.forward(params_, h, tape);
  h = swish_forward(h, tape);
  h = n.dw2.forward(params_, h, tape);
  h = n.pw2.forward(params_, h, tape);
  h = n.in2.forward(params_, h, tape);
  h = swish_forward(h, tape);
  h += n.shortcut.forward(params_, x, tape);
  return h;
}

Tensor RogNet::node_backward(const Node& n, const Tensor& gy, Tape& tape, Grads* grads) const {
  Tensor gx = n.shortcut.backward(params_, gy, tape, grads, true);
  Tensor g = swish_backward(gy, tape);
  g = n.in2.backward(params_, g, tape, grads, true);
  g = n.pw2.backward(params_, g, tape, grads, true);
  g = n.dw2.backward(params_, g, tape, grads, true);
  g = swish_backward(g, tape);
  g = n.in1.backward(params_, g, tape, grads, true);
  g = n.pw1.backward(params_, g, tape, grads, true);
  gx += n.dw1.backward(params_, g, tape, grads, true);
  return gx;
}

Tensor RogNet::forward(const Tensor& x, Tape* tape) const {
  require(x.rank() == 4 && x.channels() == cfg_.in_channels, ErrorKind::kInvalidArgument,
          "input channel count does not match the model");
  require(x.spatial() == cfg_.patch_size, ErrorKind::kInvalidArgument, "input spatial shape must equal the patch size");

  Tensor h = x;
  for (const auto& b : stem_) {
    h = b.conv.forward(params_, h, tape);
    h = b.norm.forward(params_, h, tape);
    h = swish_forward(h, tape);
  }

  std::vector<Tensor> outs(lattice_.size());
  for (std::size_t i = 0; i < lattice_.size(); ++i) {
    const Node& n = lattice_[i];
    Tensor in;
    if (n.edges.empty()) {
      in = std::move(h);
    } else {
      for (const auto& e : n.edges) {
        const Tensor& src = outs[static_cast<std::size_t>(e.source)];
        Tensor t;
        switch (e.kind) {
          case EdgeKind::kSameScale: t = src; break;
          case EdgeKind::kFromFiner: t = e.conv.forward(params_, src, tape); break;
          case EdgeKind::kFromCoarser: t = upsample_forward(e.conv.forward(params_, src, tape), {2, 2, 2}); break;
        }
        if (in.empty()) in = std::move(t);
        else in += t;
      }
    }
    outs[i] = node_forward(n, in, tape);
  }

  h = head_.conv.forward(params_, outs.back(), tape);
  h = head_.norm.forward(params_, h, tape);
  h = swish_forward(h, tape);
  h = classifier_.forward(params_, h, tape);
  return upsample_forward(h, cfg_.initial_factors);
}

Tensor RogNet::backward(const Tensor& grad_logits, Tape& tape, Grads* grads, bool need_input_grad) const {
  const Index3 s0 = cfg_.scale_shape(0);
  Tensor g = upsample_backward(grad_logits, cfg_.initial_factors, s0);
  g = classifier_.backward(params_, g, tape, grads, true);
  g = swish_backward(g, tape);
  g = head_.norm.backward(params_, g, tape, grads, true);
  g = head_.conv.backward(params_, g, tape, grads, true);

  std::vector<Tensor> node_grads(lattice_.size());
  node_grads.back() = std::move(g);
  Tensor g_stem;
  for (std::size_t ii = lattice_.size(); ii-- > 0;) {
    const Node& n = lattice_[ii];
    const NodeSpec& spec = nodes_[ii];
    Tensor gout = std::move(node_grads[ii]);
    if (gout.empty()) gout = Tensor(spec.width, cfg_.scale_shape(spec.scale));
    Tensor gin = node_backward(n, gout, tape, grads);
    if (n.edges.empty()) {
      g_stem = std::move(gin);
      continue;
    }
    for (std::size_t e = n.edges.size(); e-- > 0;) {
      const Edge& edge = n.edges[e];
      Tensor gs;
      switch (edge.kind) {
        case EdgeKind::kSameScale: gs = gin; break;
        case EdgeKind::kFromFiner: gs = edge.conv.backward(params_, gin, tape, grads, true); break;
        case EdgeKind::kFromCoarser: {
          const NodeSpec& src = nodes_[static_cast<std::size_t>(edge.source)];
          const Tensor gu = upsample_backward(gin, {2, 2, 2}, cfg_.scale_shape(src.scale));
          gs = edge.conv.backward(params_, gu, tape, grads, true);
          break;
        }
      }
      Tensor& acc = node_grads[static_cast<std::size_t>(edge.source)];
      if (acc.empty()) acc = std::move(gs);
      else acc += gs;
    }
  }

  g = std::move(g_stem);
  for (std::size_t i = stem_.size(); i-- > 0;) {
    g = swish_backward(g, tape);
    g = stem_[i].norm.backward(params_, g, tape, grads, true);
    g = stem_[i].conv.backward(params_, g, tape, grads, i > 0 || need_input_grad);
  }
  return g;
}

}  // namespace rog::model
