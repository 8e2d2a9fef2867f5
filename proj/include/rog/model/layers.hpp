#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rog/core/tensor.hpp"

namespace rog::model {

// Trainable tensors addressed by id. Layers hold ids, never references, so a
// model can be copied and evaluated concurrently with external gradient sinks.
class ParamSet {
 public:
  int add(std::string name, std::vector<int> shape, float fill = 0.0f);
  Tensor& value(int id) { return values_.at(static_cast<std::size_t>(id)); }
  const Tensor& value(int id) const { return values_.at(static_cast<std::size_t>(id)); }
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(values_.size()); }
  std::size_t scalar_count() const;
  std::vector<Tensor> zeros_like() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

using Grads = std::vector<Tensor>;

// LIFO store of activations saved by forward passes; backward pops in reverse.
class Tape {
 public:
  void push(Tensor t) { saved_.push_back(std::move(t)); }
  Tensor pop();
  bool empty() const { return saved_.empty(); }
  std::size_t depth() const { return saved_.size(); }

 private:
  std::vector<Tensor> saved_;
};

// Full 3-D convolution, cubic kernel of size 1 or 3, per-axis stride 1 or 2,
// "same" padding. Weight layout: (out, in, k, k, k).
class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(ParamSet& ps, const std::string& name, int in, int out, int kernel, Index3 stride, bool bias,
         std::mt19937_64& rng);

  Index3 output_shape(const Index3& in) const;
  Tensor forward(const ParamSet& ps, const Tensor& x, Tape* tape) const;
  // Returns the input gradient (empty when need_input_grad is false).
  Tensor backward(const ParamSet& ps, const Tensor& gy, Tape& tape, Grads* grads, bool need_input_grad) const;

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

 private:
  int in_ = 0, out_ = 0, k_ = 1;
  Index3 stride_{1, 1, 1};
  int weight_ = -1, bias_ = -1;

  bool is_pointwise_identity_layout() const { return k_ == 1 && stride_ == Index3{1, 1, 1}; }
  void im2col(const Tensor& x, const Index3& out_shape, std::vector<float>& cols) const;
  void col2im(const std::vector<float>& cols, const Index3& out_shape, Tensor& gx) const;
};

// Per-channel 3x3x3 convolution, stride 1, zero padding 1, no bias.
class DepthwiseConv3d {
 public:
  DepthwiseConv3d() = default;
  DepthwiseConv3d(ParamSet& ps, const std::string& name, int channels, std::mt19937_64& rng);

  Tensor forward(const ParamSet& ps, const Tensor& x, Tape* tape) const;
  Tensor backward(const ParamSet& ps, const Tensor& gy, Tape& tape, Grads* grads, bool need_input_grad) const;

 private:
  int channels_ = 0;
  int weight_ = -1;
};

// Per-sample, per-channel normalisation with learned scale and shift.
class InstanceNorm {
 public:
  static constexpr float kEps = 1e-5f;

  InstanceNorm() = default;
  InstanceNorm(ParamSet& ps, const std::string& name, int channels);

  Tensor forward(const ParamSet& ps, const Tensor& x, Tape* tape) const;
  Tensor backward(const ParamSet& ps, const Tensor& gy, Tape& tape, Grads* grads, bool need_input_grad) const;

 private:
  int channels_ = 0;
  int gamma_ = -1, beta_ = -1;
};

// x * sigmoid(x)
Tensor swish_forward(const Tensor& x, Tape* tape);
Tensor swish_backward(const Tensor& gy, Tape& tape);

// Trilinear upsampling by integer per-axis factors (half-pixel centres, edge clamp).
Tensor upsample_forward(const Tensor& x, const Index3& factors);
Tensor upsample_backward(const Tensor& gy, const Index3& factors, const Index3& in_shape);

}  // namespace rog::model
