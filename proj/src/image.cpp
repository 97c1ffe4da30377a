#include "fpc/image.hpp"

#include <algorithm>
#include <cmath>

#include "fpc/errors.hpp"

namespace fpc {

Image::Image(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (pixels_.size() != height_ * width_) {
    throw DimensionError("image buffer of " + std::to_string(pixels_.size()) +
                         " bytes does not match " + std::to_string(height_) + "x" +
                         std::to_string(width_));
  }
}

Tensor image_to_tensor(const Image& image) {
  Tensor t = Tensor::chw(1, image.height(), image.width());
  const auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) t[i] = static_cast<float>(px[i]) / 255.0f;
  return t;
}

Image tensor_to_image(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 1) {
    throw DimensionError("tensor_to_image expects (1, H, W), got " + t.shape_string());
  }
  Image out(t.dim(1), t.dim(2));
  auto px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const float v = std::clamp(t[i], 0.0f, 1.0f);
    px[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return out;
}

}  // namespace fpc
