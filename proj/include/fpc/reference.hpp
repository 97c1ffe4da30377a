#pragma once

// Straight-line serial implementations kept as test oracles and benchmark
// baselines. Not used on any production path.

#include <cstddef>
#include <span>

#include "fpc/tensor.hpp"

namespace fpc::reference {

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
              std::size_t stride, std::size_t padding);

Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                        std::size_t stride, std::size_t padding, std::size_t output_padding);

/// Orientation-steered filtering: out(y,x) = sum_k bank[index(y,x)][k] * in(y+dy, x+dx),
/// zero outside the image. index < 0 leaves the output at zero.
void steered_filter(std::span<const float> input, std::size_t height, std::size_t width,
                    std::span<const float> bank, std::size_t kernel_size,
                    std::span<const int> index, std::span<float> output);

}  // namespace fpc::reference
