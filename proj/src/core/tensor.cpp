#include "rog/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rog/core/error.hpp"

namespace rog {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kEmptyForeground: return "empty-foreground";
    case ErrorKind::kDegenerateStats: return "degenerate-stats";
    case ErrorKind::kInvalidConfig: return "invalid-config";
    case ErrorKind::kMissingReference: return "missing-reference";
    case ErrorKind::kCapability: return "capability";
    case ErrorKind::kCoverage: return "coverage";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

Tensor::Tensor(std::vector<int> shape, float fill) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (int d : shape_) {
    require(d >= 0, ErrorKind::kInvalidArgument, "negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  data_.assign(n, fill);
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& o) {
  require(same_shape(o), ErrorKind::kInvalidArgument, "tensor shape mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& o) {
  require(same_shape(o), ErrorKind::kInvalidArgument, "tensor shape mismatch in -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(float s) {
  for (float& v : data_) v *= s;
  return *this;
}

double Tensor::sum() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

float Tensor::max_abs() const {
  float m = 0.0f;
  for (float v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }

}  // namespace rog
