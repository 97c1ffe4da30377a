#include "fpc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fpc/errors.hpp"
#include "fpc/kernels.hpp"

namespace fpc {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape, float fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string());
  }
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? ", " : "") << shape_[i];
  os << ')';
  return os.str();
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  if (stride == 0) throw DimensionError("stride must be >= 1");
  if (in + 2 * padding < kernel) {
    throw DimensionError("kernel " + std::to_string(kernel) + " larger than padded extent " +
                         std::to_string(in + 2 * padding));
  }
  return (in + 2 * padding - kernel) / stride + 1;
}

std::size_t conv_transpose_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                         std::size_t padding, std::size_t output_padding) {
  if (stride == 0) throw DimensionError("stride must be >= 1");
  if (output_padding >= stride) throw DimensionError("output_padding must be < stride");
  if (in == 0) throw DimensionError("empty input");
  const std::size_t full = (in - 1) * stride + kernel + output_padding;
  if (full <= 2 * padding) throw DimensionError("padding consumes the whole output");
  return full - 2 * padding;
}

namespace {

void check_conv_args(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                     std::size_t in_axis, std::size_t out_axis, const char* op) {
  if (input.rank() != 3) {
    throw DimensionError(std::string(op) + ": input must be (C, H, W), got " +
                         input.shape_string());
  }
  if (kernel.rank() != 4 || kernel.dim(2) != kernel.dim(3)) {
    throw DimensionError(std::string(op) + ": kernel must be square 4-D, got " +
                         kernel.shape_string());
  }
  if (kernel.dim(in_axis) != input.dim(0)) {
    throw DimensionError(std::string(op) + ": kernel " + kernel.shape_string() +
                         " expects " + std::to_string(kernel.dim(in_axis)) +
                         " input channels, input is " + input.shape_string());
  }
  if (!bias.empty() && bias.size() != kernel.dim(out_axis)) {
    throw DimensionError(std::string(op) + ": bias length " + std::to_string(bias.size()) +
                         " != output channels " + std::to_string(kernel.dim(out_axis)));
  }
}

void fill_bias(Tensor& out, std::span<const float> bias) {
  if (bias.empty()) return;
  const std::size_t plane = out.dim(1) * out.dim(2);
  for (std::size_t c = 0; c < out.dim(0); ++c) {
    std::fill_n(out.raw() + c * plane, plane, bias[c]);
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
              std::size_t stride, std::size_t padding) {
  check_conv_args(input, kernel, bias, 1, 0, "conv2d");
  const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  const std::size_t out_ch = kernel.dim(0), k = kernel.dim(2);
  const std::size_t out_h = conv_output_extent(height, k, stride, padding);
  const std::size_t out_w = conv_output_extent(width, k, stride, padding);

  Tensor out = Tensor::chw(out_ch, out_h, out_w);
  fill_bias(out, bias);
  const std::size_t depth = channels * k * k;
  const std::size_t plane = out_h * out_w;
  if (k == 1 && stride == 1 && padding == 0) {
    kernels::gemm_accumulate(out_ch, depth, plane, kernel.raw(), input.raw(), out.raw());
    return out;
  }
  std::vector<float> cols(depth * plane);
  kernels::im2col(input.raw(), channels, height, width, k, stride, padding, out_h, out_w,
                  cols.data());
  kernels::gemm_accumulate(out_ch, depth, plane, kernel.raw(), cols.data(), out.raw());
  return out;
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                        std::size_t stride, std::size_t padding, std::size_t output_padding) {
  check_conv_args(input, kernel, bias, 0, 1, "conv_transpose2d");
  const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  const std::size_t out_ch = kernel.dim(1), k = kernel.dim(2);
  const std::size_t out_h = conv_transpose_output_extent(height, k, stride, padding, output_padding);
  const std::size_t out_w = conv_transpose_output_extent(width, k, stride, padding, output_padding);

  // cols[(o, ky, kx)][iy, ix] = sum_c kernel[c][o][ky][kx] * input[c][iy][ix]
  const std::size_t rows = out_ch * k * k;
  const std::size_t plane = height * width;
  std::vector<float> weights_t(rows * channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const float* src = kernel.raw() + c * rows;
    for (std::size_t r = 0; r < rows; ++r) weights_t[r * channels + c] = src[r];
  }
  std::vector<float> cols(rows * plane, 0.0f);
  kernels::gemm_accumulate(rows, channels, plane, weights_t.data(), input.raw(), cols.data());

  Tensor out = Tensor::chw(out_ch, out_h, out_w);
  fill_bias(out, bias);
  kernels::col2im(cols.data(), out_ch, height, width, k, stride, padding, out_h, out_w, out.raw());
  return out;
}

Tensor leaky_relu(const Tensor& input, float negative_slope) {
  Tensor out = input;
  leaky_relu_inplace(out, negative_slope);
  return out;
}

void leaky_relu_inplace(Tensor& t, float negative_slope) {
  for (float& v : t.data()) v = v >= 0.0f ? v : v * negative_slope;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
  return s;
}

}  // namespace fpc
