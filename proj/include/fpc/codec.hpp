#pragma once

// End-to-end learned codec: image -> (z_hat stream, y_hat stream) and back.

#include <cstdint>
#include <span>
#include <vector>

#include "fpc/entropy.hpp"
#include "fpc/image.hpp"
#include "fpc/model.hpp"

namespace fpc::codec {

inline constexpr std::uint16_t kBitstreamVersion = 1;

enum class StreamVariant : std::uint8_t { learned = 0, wavelet = 1 };

struct BitstreamHeader {
  std::uint16_t version = kBitstreamVersion;
  StreamVariant variant = StreamVariant::learned;
  std::uint64_t model_hash = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint16_t latent_channels = 0;
  std::uint16_t hyper_channels = 0;

  friend bool operator==(const BitstreamHeader&, const BitstreamHeader&) = default;
};

/// Fixed size of the serialized header, magic included.
inline constexpr std::size_t kHeaderBytes = 27;
/// Header + two length prefixes + CRC32 trailer.
inline constexpr std::size_t kContainerBytes = kHeaderBytes + 4 + 4 + 4;

/// Header plus two length-prefixed entropy-coded segments. For the learned
/// codec these hold z_hat and y_hat; the wavelet baseline stores its side
/// information in the first and coefficients in the second.
struct Bitstream {
  BitstreamHeader header;
  std::vector<std::uint8_t> z_stream;
  std::vector<std::uint8_t> y_stream;

  std::size_t payload_bytes() const { return z_stream.size() + y_stream.size(); }
  std::size_t total_bytes() const { return kContainerBytes + payload_bytes(); }
  /// 8 * total bytes / (H * W).
  double bpp() const;

  friend bool operator==(const Bitstream&, const Bitstream&) = default;
};

std::vector<std::uint8_t> serialize(const Bitstream& b);
/// Throws BadMagicError, VersionMismatchError, TruncatedError or ChecksumError.
Bitstream parse_bitstream(std::span<const std::uint8_t> bytes);

struct EncodeResult {
  Bitstream stream;
  Image reconstruction;  // what decode() will return
  entropy::IntTensor z_hat;
  entropy::IntTensor y_hat;
  double z_bits = 0.0;  // model code length of z_hat
  double y_bits = 0.0;  // model code length of y_hat given (mu, sigma)
};

/// A weight set bound to its hash, reusable across many images and threads.
class LearnedCodec {
 public:
  explicit LearnedCodec(model::ModelWeights weights);

  const model::ModelWeights& weights() const { return weights_; }
  std::uint64_t hash() const { return hash_; }

  EncodeResult encode(const Image& x) const;
  /// Throws ModelMismatchError when the stream was made with other weights.
  Image decode(const Bitstream& b) const;

 private:
  model::ModelWeights weights_;
  std::uint64_t hash_;
};

Bitstream encode(const Image& x, const model::ModelWeights& w);
Image decode(const Bitstream& b, const model::ModelWeights& w);

struct RDLoss {
  float lambda = 0.0f;
  double distortion = 0.0;       // MSE on [0, 1] pixels
  double distortion_scale = 0.0; // multiplier applied to distortion in total
  double rate_y = 0.0;           // bits per latent element
  double rate_z = 0.0;           // bits per hyper-latent element
  double total = 0.0;            // lambda * scale * distortion + rate_y + rate_z
};

inline constexpr double kDistortionScale = 255.0 * 255.0;

/// Inference-mode loss of one image under hard quantization.
RDLoss rd_loss(const Image& x, const model::ModelWeights& w, float lambda);
/// Compose the loss from already-computed parts.
RDLoss compose_rd_loss(float lambda, double mse, double rate_y, double rate_z);

/// Mean squared error of two equally sized images on the [0, 1] scale.
double mse_unit(const Image& a, const Image& b);

}  // namespace fpc::codec
