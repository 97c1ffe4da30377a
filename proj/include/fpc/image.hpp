#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fpc/tensor.hpp"

namespace fpc {

/// 8-bit grayscale raster, row-major.
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, std::uint8_t fill = 0)
      : height_(height), width_(width), pixels_(height * width, fill) {}
  Image(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t& at(std::size_t y, std::size_t x) { return pixels_[y * width_ + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return pixels_[y * width_ + x]; }

  std::span<std::uint8_t> pixels() { return pixels_; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Binary raster (0/1 per pixel), same layout as Image.
using BinaryImage = Image;

/// (1, H, W) tensor with pixels scaled to [0, 1].
Tensor image_to_tensor(const Image& image);

/// Clamp a (1, H, W) tensor to [0, 1] and round to 8-bit.
Image tensor_to_image(const Tensor& t);

}  // namespace fpc
