#pragma once

// Image fixtures shared by the test binaries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "fpc/image.hpp"
#include "fpc/tensor.hpp"

namespace fpc::test {

/// Straight dark ridges of the given period and angle inside the square
/// [margin, size - margin) on a flat light background.
inline Image ridge_field(std::size_t size, double period, double angle = 0.0, std::size_t margin = 48) {
  Image im(size, size, 230);
  const double nx = -std::sin(angle), ny = std::cos(angle);
  for (std::size_t y = margin; y < size - margin; ++y) {
    for (std::size_t x = margin; x < size - margin; ++x) {
      const double across = static_cast<double>(x) * nx + static_cast<double>(y) * ny;
      const double v = 128.0 - 95.0 * std::cos(2.0 * std::numbers::pi * across / period);
      im.at(y, x) = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return im;
}

// Severed-ridge fixture: horizontal ridges of period 14, the one centered on
// row 154 painted over with valley for 30 columns. Narrower periods are
// bridged by the Gabor stage (sigma 4 spans several ridges).
inline constexpr double kSeveredPeriod = 14.0;
inline constexpr std::size_t kSeveredRow = 154;
inline constexpr std::size_t kSeveredStart = 150;
inline constexpr std::size_t kSeveredLength = 30;

inline Image severed_original() { return ridge_field(320, kSeveredPeriod); }

inline Image severed_compressed() {
  Image im = severed_original();
  const std::size_t half = static_cast<std::size_t>(kSeveredPeriod) / 2 - 1;
  for (std::size_t y = kSeveredRow - half; y <= kSeveredRow + half; ++y) {
    for (std::size_t x = kSeveredStart; x < kSeveredStart + kSeveredLength; ++x) im.at(y, x) = 223;
  }
  return im;
}

inline Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, float lo = -1.0f,
                            float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

inline Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image im(h, w);
  for (auto& p : im.pixels()) p = static_cast<std::uint8_t>(rng() & 0xff);
  return im;
}

}  // namespace fpc::test
