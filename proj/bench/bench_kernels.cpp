// Parallel kernels against the serial reference implementations.
// The range argument is the OpenMP thread count for the kernel variants.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "fpc/codec.hpp"
#include "fpc/data.hpp"
#include "fpc/kernels.hpp"
#include "fpc/model.hpp"
#include "fpc/reference.hpp"
#include "fpc/tensor.hpp"

using namespace fpc;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  for (auto& v : t.data()) v = d(rng);
  return t;
}

struct ConvCase {
  std::size_t in_c, out_c, size, kernel, stride, padding;
};

// Encoder-shaped layers: image input, then a wide strided layer.
constexpr ConvCase kConv[] = {{1, 128, 320, 5, 2, 2}, {128, 128, 40, 5, 2, 2}};
// Decoder-shaped layers: wide upsampling, then the single-channel output.
constexpr ConvCase kConvT[] = {{128, 128, 20, 5, 2, 2}, {128, 1, 160, 5, 2, 2}};

void set_flops(benchmark::State& state, const ConvCase& c, std::size_t out_pixels) {
  state.counters["FLOPS"] = benchmark::Counter(
      2.0 * double(c.in_c * c.out_c * c.kernel * c.kernel * out_pixels), benchmark::Counter::kIsIterationInvariantRate,
      benchmark::Counter::kIs1000);
}

void BM_conv2d_reference(benchmark::State& state) {
  const ConvCase& c = kConv[state.range(0)];
  const Tensor x = random_tensor({c.in_c, c.size, c.size}, 1);
  const Tensor k = random_tensor({c.out_c, c.in_c, c.kernel, c.kernel}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(reference::conv2d(x, k, {}, c.stride, c.padding));
  const std::size_t o = conv_output_extent(c.size, c.kernel, c.stride, c.padding);
  set_flops(state, c, o * o);
}

void BM_conv2d_kernel(benchmark::State& state) {
  const ConvCase& c = kConv[state.range(0)];
  omp_set_num_threads(int(state.range(1)));
  const Tensor x = random_tensor({c.in_c, c.size, c.size}, 1);
  const Tensor k = random_tensor({c.out_c, c.in_c, c.kernel, c.kernel}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, k, {}, c.stride, c.padding));
  const std::size_t o = conv_output_extent(c.size, c.kernel, c.stride, c.padding);
  set_flops(state, c, o * o);
}

void BM_conv_transpose2d_reference(benchmark::State& state) {
  const ConvCase& c = kConvT[state.range(0)];
  const Tensor x = random_tensor({c.in_c, c.size, c.size}, 3);
  const Tensor k = random_tensor({c.in_c, c.out_c, c.kernel, c.kernel}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(reference::conv_transpose2d(x, k, {}, c.stride, c.padding, 1));
  set_flops(state, c, c.size * c.size);
}

void BM_conv_transpose2d_kernel(benchmark::State& state) {
  const ConvCase& c = kConvT[state.range(0)];
  omp_set_num_threads(int(state.range(1)));
  const Tensor x = random_tensor({c.in_c, c.size, c.size}, 3);
  const Tensor k = random_tensor({c.in_c, c.out_c, c.kernel, c.kernel}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(conv_transpose2d(x, k, {}, c.stride, c.padding, 1));
  set_flops(state, c, c.size * c.size);
}

struct SteeredInput {
  std::vector<float> image, bank;
  std::vector<int> index;
  std::vector<float> out;
  static constexpr std::size_t kSize = 320, kKernel = 25, kBank = 16 * 8;

  SteeredInput() : image(kSize * kSize), bank(kBank * kKernel * kKernel), index(kSize * kSize), out(kSize * kSize) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> d(-1.0f, 1.0f);
    for (auto& v : image) v = d(rng);
    for (auto& v : bank) v = d(rng);
    for (auto& v : index) v = int(rng() % kBank);
  }
};

void BM_steered_filter_reference(benchmark::State& state) {
  SteeredInput s;
  for (auto _ : state) {
    reference::steered_filter(s.image, s.kSize, s.kSize, s.bank, s.kKernel, s.index, s.out);
    benchmark::DoNotOptimize(s.out.data());
  }
}

void BM_steered_filter_kernel(benchmark::State& state) {
  omp_set_num_threads(int(state.range(0)));
  SteeredInput s;
  for (auto _ : state) {
    kernels::steered_filter(s.image, s.kSize, s.kSize, s.bank, s.kKernel, s.index, s.out);
    benchmark::DoNotOptimize(s.out.data());
  }
}

void BM_codec_encode(benchmark::State& state) {
  omp_set_num_threads(int(state.range(0)));
  static const codec::LearnedCodec c(model::make_seed_weights());
  const Image x = data::gen_synthetic_fingerprint(1, 320, 320);
  for (auto _ : state) benchmark::DoNotOptimize(c.encode(x));
}

void thread_counts(benchmark::internal::Benchmark* b, bool with_case) {
  std::vector<int> threads = {1};
  for (int t = 2; t <= omp_get_num_procs(); t *= 2) threads.push_back(t);
  for (int c = 0; c < (with_case ? 2 : 1); ++c)
    for (int t : threads) with_case ? b->Args({c, t}) : b->Arg(t);
}

}  // namespace

BENCHMARK(BM_conv2d_reference)->DenseRange(0, 1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_kernel)->Apply([](auto* b) { thread_counts(b, true); })->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_transpose2d_reference)->DenseRange(0, 1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_transpose2d_kernel)->Apply([](auto* b) { thread_counts(b, true); })->Unit(benchmark::kMillisecond);
BENCHMARK(BM_steered_filter_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_steered_filter_kernel)->Apply([](auto* b) { thread_counts(b, false); })->Unit(benchmark::kMillisecond);
BENCHMARK(BM_codec_encode)->Apply([](auto* b) { thread_counts(b, false); })->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
