#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rog {

using Index3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

inline std::size_t voxel_count(const Index3& s) {
  return static_cast<std::size_t>(s[0]) * s[1] * s[2];
}

// Dense row-major float tensor. Rank 4 (C, D, H, W) is the common case;
// rank 1 and 2 appear for parameters.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, float fill = 0.0f);
  Tensor(int c, const Index3& spatial, float fill = 0.0f)
      : Tensor(std::vector<int>{c, spatial[0], spatial[1], spatial[2]}, fill) {}

  const std::vector<int>& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Rank-4 helpers.
  int channels() const { return dim(0); }
  Index3 spatial() const { return {dim(1), dim(2), dim(3)}; }
  std::size_t plane() const { return voxel_count(spatial()); }
  float* channel(int c) { return data_.data() + static_cast<std::size_t>(c) * plane(); }
  const float* channel(int c) const { return data_.data() + static_cast<std::size_t>(c) * plane(); }

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }
  std::vector<float>& storage() noexcept { return data_; }
  const std::vector<float>& storage() const noexcept { return data_; }

  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  float& at(int c, int z, int y, int x) {
    return data_[((static_cast<std::size_t>(c) * shape_[1] + z) * shape_[2] + y) * shape_[3] + x];
  }
  float at(int c, int z, int y, int x) const {
    return data_[((static_cast<std::size_t>(c) * shape_[1] + z) * shape_[2] + y) * shape_[3] + x];
  }

  void fill(float v);
  void zero() { fill(0.0f); }
  bool same_shape(const Tensor& o) const noexcept { return shape_ == o.shape_; }

  Tensor& operator+=(const Tensor& o);
  Tensor& operator-=(const Tensor& o);
  Tensor& operator*=(float s);

  double sum() const;
  float max_abs() const;
  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);

}  // namespace rog
