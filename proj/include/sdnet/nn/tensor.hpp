#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sdnet/common.hpp"

namespace sdnet::nn {

SDNET_DEFINE_ERROR(ShapeMismatch);

using Scalar = double;

/// Dense row-major tensor. Shapes follow NCHW for images.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, Scalar fill = 0.0)
      : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  static Tensor from_data(std::vector<int> shape, std::vector<Scalar> data) {
    Tensor t;
    if (checked_size(shape) != data.size())
      throw ShapeMismatch("tensor data size does not match shape");
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  static Tensor scalar(Scalar v) { return from_data({1}, {v}); }

  int ndim() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int shape(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  Scalar& operator[](std::size_t i) { return data_[i]; }
  Scalar operator[](std::size_t i) const { return data_[i]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  /// Flat offset into a 4-d tensor.
  std::size_t at4(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }

  Scalar item() const {
    if (size() != 1) throw ShapeMismatch("item() on non-scalar tensor");
    return data_[0];
  }

  void fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (Scalar v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Tensor reshaped(std::vector<int> new_shape) const {
    if (checked_size(new_shape) != size()) throw ShapeMismatch("reshape changes element count");
    Tensor t = *this;
    t.shape_ = std::move(new_shape);
    return t;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (int i = 0; i < ndim(); ++i) s += (i ? "," : "") + std::to_string(shape_[i]);
    return s + "]";
  }

 private:
  static std::size_t checked_size(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
      if (d < 0) throw ShapeMismatch("negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    return shape.empty() ? 0 : n;
  }

  std::vector<int> shape_;
  std::vector<Scalar> data_;
};

}  // namespace sdnet::nn
