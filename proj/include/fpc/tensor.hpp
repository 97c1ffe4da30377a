#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fpc {

/// Dense row-major float tensor. Images and feature maps use (C, H, W).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, float fill = 0.0f);
  Tensor(std::vector<std::size_t> shape, std::vector<float> data);

  static Tensor chw(std::size_t c, std::size_t h, std::size_t w, float fill = 0.0f) {
    return Tensor({c, h, w}, fill);
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  float* raw() { return data_.data(); }
  const float* raw() const { return data_.data(); }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // (C, H, W) element access; no bounds checks.
  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

/// Output extent of a strided convolution along one axis.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding);
/// Output extent of a transposed convolution along one axis.
std::size_t conv_transpose_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                         std::size_t padding, std::size_t output_padding);

/// 2-D cross-correlation with zero padding.
/// input (C, H, W), kernel (O, C, k, k), bias empty or of length O.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
              std::size_t stride, std::size_t padding);

/// Transposed convolution, the adjoint of conv2d with the same geometry.
/// input (C, H, W), kernel (C, O, k, k) as in the usual deep-learning layout.
Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                        std::size_t stride, std::size_t padding, std::size_t output_padding);

Tensor leaky_relu(const Tensor& input, float negative_slope);
void leaky_relu_inplace(Tensor& t, float negative_slope);

/// Inner product over all elements, accumulated in double.
double dot(const Tensor& a, const Tensor& b);

}  // namespace fpc
