#include "fpc/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstring>
#include <vector>

namespace fpc::kernels {

namespace {

// Register tile: kRows rows of A against kCols columns of B. With 512-bit
// vectors the 8x48 accumulator occupies 24 registers.
constexpr std::size_t kRows = 8;
constexpr std::size_t kCols = 48;
// Depth block: keeps a kDepth x kCols strip of B resident in L1/L2.
constexpr std::size_t kDepth = 256;

// a_panel: depth x kRows (row i of the tile at a_panel[r * kRows + i]).
inline void tile_full(std::size_t depth, const float* a_panel, const float* b, std::size_t ldb,
                      float* c, std::size_t ldc, std::size_t rows) {
  float acc[kRows][kCols];
  for (std::size_t i = 0; i < kRows; ++i) {
    if (i < rows) {
      std::memcpy(acc[i], c + i * ldc, sizeof(float) * kCols);
    } else {
      std::memset(acc[i], 0, sizeof(float) * kCols);
    }
  }
  for (std::size_t r = 0; r < depth; ++r, a_panel += kRows, b += ldb) {
#pragma GCC unroll 8
    for (std::size_t i = 0; i < kRows; ++i) {
      const float w = a_panel[i];
#pragma GCC unroll 48
      for (std::size_t j = 0; j < kCols; ++j) acc[i][j] += w * b[j];
    }
  }
  for (std::size_t i = 0; i < rows; ++i) std::memcpy(c + i * ldc, acc[i], sizeof(float) * kCols);
}

inline void tile_partial(std::size_t depth, const float* a_panel, const float* b, std::size_t ldb,
                         float* c, std::size_t ldc, std::size_t rows, std::size_t cols) {
  float acc[kRows][kCols] = {};
  for (std::size_t i = 0; i < rows; ++i) std::memcpy(acc[i], c + i * ldc, sizeof(float) * cols);
  for (std::size_t r = 0; r < depth; ++r, a_panel += kRows, b += ldb) {
    for (std::size_t i = 0; i < kRows; ++i) {
      const float w = a_panel[i];
      for (std::size_t j = 0; j < cols; ++j) acc[i][j] += w * b[j];
    }
  }
  for (std::size_t i = 0; i < rows; ++i) std::memcpy(c + i * ldc, acc[i], sizeof(float) * cols);
}

}  // namespace

void gemm_accumulate(std::size_t m, std::size_t k, std::size_t p, const float* a, const float* b,
                     float* c) {
  if (m == 0 || k == 0 || p == 0) return;
  const std::size_t row_blocks = (m + kRows - 1) / kRows;
  // Pack A into k x kRows panels, zero-filled past the last row.
  std::vector<float> packed(row_blocks * k * kRows, 0.0f);
  for (std::size_t rb = 0; rb < row_blocks; ++rb) {
    float* panel = packed.data() + rb * k * kRows;
    const std::size_t rows = std::min(kRows, m - rb * kRows);
    for (std::size_t i = 0; i < rows; ++i) {
      const float* src = a + (rb * kRows + i) * k;
      for (std::size_t r = 0; r < k; ++r) panel[r * kRows + i] = src[r];
    }
  }

  const std::size_t col_tiles = (p + kCols - 1) / kCols;
  for (std::size_t k0 = 0; k0 < k; k0 += kDepth) {
    const std::size_t depth = std::min(kDepth, k - k0);
    const float* b_block = b + k0 * p;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(col_tiles); ++t) {
      const std::size_t p0 = static_cast<std::size_t>(t) * kCols;
      const std::size_t cols = std::min(kCols, p - p0);
      for (std::size_t rb = 0; rb < row_blocks; ++rb) {
        const float* panel = packed.data() + rb * k * kRows + k0 * kRows;
        const std::size_t rows = std::min(kRows, m - rb * kRows);
        float* c_tile = c + rb * kRows * p + p0;
        if (cols == kCols) {
          tile_full(depth, panel, b_block + p0, p, c_tile, p, rows);
        } else {
          tile_partial(depth, panel, b_block + p0, p, c_tile, p, rows, cols);
        }
      }
    }
  }
}

void im2col(const float* input, std::size_t channels, std::size_t height, std::size_t width,
            std::size_t kernel, std::size_t stride, std::size_t padding, std::size_t out_h,
            std::size_t out_w, float* cols) {
  const std::size_t plane = out_h * out_w;
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(channels * kernel * kernel);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t row = 0; row < rows; ++row) {
    const std::size_t c = static_cast<std::size_t>(row) / (kernel * kernel);
    const std::size_t ky = (static_cast<std::size_t>(row) / kernel) % kernel;
    const std::size_t kx = static_cast<std::size_t>(row) % kernel;
    const float* in = input + c * height * width;
    float* dst = cols + static_cast<std::size_t>(row) * plane;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                static_cast<std::ptrdiff_t>(padding);
      float* d = dst + oy * out_w;
      if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) {
        std::fill(d, d + out_w, 0.0f);
        continue;
      }
      const float* src = in + static_cast<std::size_t>(iy) * width;
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                  static_cast<std::ptrdiff_t>(padding);
        d[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(width)) ? 0.0f
                                                                     : src[static_cast<std::size_t>(ix)];
      }
    }
  }
}

void col2im(const float* cols, std::size_t channels, std::size_t height, std::size_t width,
            std::size_t kernel, std::size_t stride, std::size_t padding, std::size_t out_h,
            std::size_t out_w, float* output) {
  const std::size_t plane = height * width;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(channels); ++ci) {
    const std::size_t c = static_cast<std::size_t>(ci);
    float* out = output + c * out_h * out_w;
    for (std::size_t ky = 0; ky < kernel; ++ky) {
      for (std::size_t kx = 0; kx < kernel; ++kx) {
        const float* src = cols + ((c * kernel + ky) * kernel + kx) * plane;
        for (std::size_t iy = 0; iy < height; ++iy) {
          const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(iy * stride + ky) -
                                    static_cast<std::ptrdiff_t>(padding);
          if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(out_h)) continue;
          float* o = out + static_cast<std::size_t>(oy) * out_w;
          const float* s = src + iy * width;
          for (std::size_t ix = 0; ix < width; ++ix) {
            const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(ix * stride + kx) -
                                      static_cast<std::ptrdiff_t>(padding);
            if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(out_w)) continue;
            o[ox] += s[ix];
          }
        }
      }
    }
  }
}

void steered_filter(std::span<const float> input, std::size_t height, std::size_t width,
                    std::span<const float> bank, std::size_t kernel_size,
                    std::span<const int> index, std::span<float> output) {
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel_size / 2);
  const std::size_t taps = kernel_size * kernel_size;
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(height);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(width);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const std::size_t at = static_cast<std::size_t>(y * w + x);
      const int which = index[at];
      if (which < 0) {
        output[at] = 0.0f;
        continue;
      }
      const float* kern = bank.data() + static_cast<std::size_t>(which) * taps;
      float sum = 0.0f;
      const bool interior = y >= half && y + half < h && x >= half && x + half < w;
      if (interior) {
        for (std::ptrdiff_t dy = -half; dy <= half; ++dy) {
          const float* row = input.data() + (y + dy) * w + (x - half);
          const float* k = kern + (dy + half) * static_cast<std::ptrdiff_t>(kernel_size);
#pragma omp simd reduction(+ : sum)
          for (std::size_t i = 0; i < kernel_size; ++i) sum += k[i] * row[i];
        }
      } else {
        for (std::ptrdiff_t dy = -half; dy <= half; ++dy) {
          const std::ptrdiff_t yy = y + dy;
          if (yy < 0 || yy >= h) continue;
          const float* k = kern + (dy + half) * static_cast<std::ptrdiff_t>(kernel_size);
          for (std::ptrdiff_t dx = -half; dx <= half; ++dx) {
            const std::ptrdiff_t xx = x + dx;
            if (xx < 0 || xx >= w) continue;
            sum += k[dx + half] * input[static_cast<std::size_t>(yy * w + xx)];
          }
        }
      }
      output[at] = sum;
    }
  }
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace fpc::kernels
