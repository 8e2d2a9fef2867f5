#pragma once

#include <filesystem>
#include <vector>

#include "rog/model/lattice_config.hpp"
#include "rog/model/layers.hpp"

namespace rog::model {

// The triangular-lattice segmentation network.
//
//   initial module : 4 x (3x3x3 conv, instance norm, swish); strides realise
//                    the per-axis initial factors
//   lattice        : nodes of two separable convolutions (depthwise 3x3x3 +
//                    pointwise), each followed by instance norm and swish,
//                    with a 1x1x1 projection shortcut around the pair;
//                    incoming edges are summed
//   head           : 3x3x3 conv + norm + swish, 1x1x1 conv to C logits,
//                    trilinear upsampling back to patch resolution
class RogNet {
 public:
  explicit RogNet(LatticeConfig cfg);

  const LatticeConfig& config() const { return cfg_; }
  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // Exact number of trainable scalars.
  std::size_t count_params() const { return params_.scalar_count(); }

  // x: (in_channels, patch) -> logits (num_classes, patch). With a tape the
  // activations needed by backward are recorded.
  Tensor forward(const Tensor& x, Tape* tape = nullptr) const;

  // Consumes the tape of the matching forward. Parameter gradients accumulate
  // into grads when non-null; returns d loss / d x when need_input_grad.
  Tensor backward(const Tensor& grad_logits, Tape& tape, Grads* grads, bool need_input_grad) const;

  // Spatial shape of the feature maps observed at each lattice scale during
  // the last forward is fixed by the config; exposed for resolution checks.
  std::vector<Index3> scale_shapes() const;

 private:
  struct Block {
    int in_ch = 0;
    Conv3d conv;
    InstanceNorm norm;
  };
  struct Edge {
    EdgeKind kind;
    int source;
    Conv3d conv;  // unused for same-scale edges
  };
  struct Node {
    DepthwiseConv3d dw1, dw2;
    Conv3d pw1, pw2, shortcut;
    InstanceNorm in1, in2;
    std::vector<Edge> edges;
  };

  Tensor node_forward(const Node& n, const Tensor& x, Tape* tape) const;
  Tensor node_backward(const Node& n, const Tensor& gy, Tape& tape, Grads* grads) const;

  LatticeConfig cfg_;
  std::vector<NodeSpec> nodes_;
  ParamSet params_;
  std::vector<Block> stem_;
  std::vector<Node> lattice_;
  Block head_;
  Conv3d classifier_;
};

// Self-describing checkpoint: JSON config header followed by float32 weights.
void save_checkpoint(const std::filesystem::path& path, const RogNet& net);
RogNet load_checkpoint(const std::filesystem::path& path);

}  // namespace rog::model
