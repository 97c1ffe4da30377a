#include "fpc/reference.hpp"

#include "fpc/errors.hpp"

namespace fpc::reference {

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
              std::size_t stride, std::size_t padding) {
  if (input.rank() != 3 || kernel.rank() != 4 || kernel.dim(1) != input.dim(0)) {
    throw DimensionError("reference::conv2d: shape mismatch");
  }
  const std::size_t channels = input.dim(0);
  const std::ptrdiff_t height = static_cast<std::ptrdiff_t>(input.dim(1));
  const std::ptrdiff_t width = static_cast<std::ptrdiff_t>(input.dim(2));
  const std::size_t out_ch = kernel.dim(0), k = kernel.dim(2);
  const std::size_t out_h = conv_output_extent(input.dim(1), k, stride, padding);
  const std::size_t out_w = conv_output_extent(input.dim(2), k, stride, padding);
  Tensor out = Tensor::chw(out_ch, out_h, out_w);
  for (std::size_t o = 0; o < out_ch; ++o) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        float sum = 0.0f;
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
            if (iy < 0 || iy >= height) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                        static_cast<std::ptrdiff_t>(padding);
              if (ix < 0 || ix >= width) continue;
              sum += kernel.raw()[((o * channels + c) * k + ky) * k + kx] *
                     input.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
        out.at(o, oy, ox) = sum + (bias.empty() ? 0.0f : bias[o]);
      }
    }
  }
  return out;
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                        std::size_t stride, std::size_t padding, std::size_t output_padding) {
  if (input.rank() != 3 || kernel.rank() != 4 || kernel.dim(0) != input.dim(0)) {
    throw DimensionError("reference::conv_transpose2d: shape mismatch");
  }
  const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  const std::size_t out_ch = kernel.dim(1), k = kernel.dim(2);
  const std::size_t out_h = conv_transpose_output_extent(height, k, stride, padding, output_padding);
  const std::size_t out_w = conv_transpose_output_extent(width, k, stride, padding, output_padding);
  Tensor out = Tensor::chw(out_ch, out_h, out_w);
  // Gather form: each output pixel collects the inputs whose footprint covers it.
  for (std::size_t o = 0; o < out_ch; ++o) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        float sum = 0.0f;
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(oy + padding) -
                                      static_cast<std::ptrdiff_t>(ky);
            if (ny < 0 || ny % static_cast<std::ptrdiff_t>(stride) != 0) continue;
            const std::size_t iy = static_cast<std::size_t>(ny) / stride;
            if (iy >= height) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(ox + padding) -
                                        static_cast<std::ptrdiff_t>(kx);
              if (nx < 0 || nx % static_cast<std::ptrdiff_t>(stride) != 0) continue;
              const std::size_t ix = static_cast<std::size_t>(nx) / stride;
              if (ix >= width) continue;
              sum += kernel.raw()[((c * out_ch + o) * k + ky) * k + kx] * input.at(c, iy, ix);
            }
          }
        }
        out.at(o, oy, ox) = sum + (bias.empty() ? 0.0f : bias[o]);
      }
    }
  }
  return out;
}

void steered_filter(std::span<const float> input, std::size_t height, std::size_t width,
                    std::span<const float> bank, std::size_t kernel_size,
                    std::span<const int> index, std::span<float> output) {
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel_size / 2);
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(height);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(width);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const std::size_t at = static_cast<std::size_t>(y * w + x);
      if (index[at] < 0) {
        output[at] = 0.0f;
        continue;
      }
      const float* kern =
          bank.data() + static_cast<std::size_t>(index[at]) * kernel_size * kernel_size;
      double sum = 0.0;
      for (std::ptrdiff_t dy = -half; dy <= half; ++dy) {
        for (std::ptrdiff_t dx = -half; dx <= half; ++dx) {
          const std::ptrdiff_t yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          sum += double(kern[(dy + half) * static_cast<std::ptrdiff_t>(kernel_size) + dx + half]) *
                 double(input[static_cast<std::size_t>(yy * w + xx)]);
        }
      }
      output[at] = static_cast<float>(sum);
    }
  }
}

}  // namespace fpc::reference
