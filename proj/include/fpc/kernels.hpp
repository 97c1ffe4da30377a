#pragma once

// Low-level data-parallel kernels. Every kernel here has a serial
// counterpart in reference.hpp that the tests check it against.
//
// Work is split across OpenMP threads so that each output element is
// produced by exactly one thread with a fixed accumulation order; results
// are bit-identical for any thread count.

#include <cstddef>
#include <span>

namespace fpc::kernels {

/// C[m x p] += A[m x k] * B[k x p]; all row-major and dense.
void gemm_accumulate(std::size_t m, std::size_t k, std::size_t p, const float* a, const float* b,
                     float* c);

/// Unfold (C, H, W) into a (C*k*k) x (OH*OW) matrix of receptive fields.
void im2col(const float* input, std::size_t channels, std::size_t height, std::size_t width,
            std::size_t kernel, std::size_t stride, std::size_t padding, std::size_t out_h,
            std::size_t out_w, float* cols);

/// Scatter-add a (C*k*k) x (H*W) matrix back onto a (C, OH, OW) plane stack.
void col2im(const float* cols, std::size_t channels, std::size_t height, std::size_t width,
            std::size_t kernel, std::size_t stride, std::size_t padding, std::size_t out_h,
            std::size_t out_w, float* output);

/// Per-pixel filtering with one of several square kernels chosen by index(y,x).
/// bank holds the kernels back to back, each kernel_size^2 floats. Pixels with
/// a negative index produce 0. Rows are processed in parallel.
void steered_filter(std::span<const float> input, std::size_t height, std::size_t width,
                    std::span<const float> bank, std::size_t kernel_size,
                    std::span<const int> index, std::span<float> output);

/// Number of threads the kernels will use.
int max_threads();

}  // namespace fpc::kernels
