#pragma once

// Wavelet transform-coding baseline: CDF 9/7 lifting, dead-zone scalar
// quantization and range coding of each subband with a two-parameter model.
// A stand-in for a JPEG2000-class codec, not a conforming implementation.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fpc/codec.hpp"
#include "fpc/image.hpp"

namespace fpc::wavelet {

enum class Filter : std::uint8_t { cdf97 = 0, haar = 1 };

// Lifting constants of the CDF 9/7 filter pair.
inline constexpr double kAlpha = -1.586134342059924;
inline constexpr double kBeta = -0.052980118572961;
inline constexpr double kGamma = 0.882911075530934;
inline constexpr double kDelta = 0.443506852043971;
inline constexpr double kK = 1.230174104914001;

struct WaveletConfig {
  int levels = 4;
  double quant_step = 8.0;    // step of the finest subbands
  double target_ratio = 0.0;  // > 0: search quant_step to hit this ratio
  Filter filter = Filter::cdf97;

  /// Throws ConfigError unless levels >= 1 and the step is positive.
  void validate() const;
};

enum class Orientation : std::uint8_t { ll = 0, hl = 1, lh = 2, hh = 3 };

/// A rectangle of the Mallat layout. Level 1 is the finest.
struct Subband {
  int level = 1;
  Orientation orientation = Orientation::ll;
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 0;
  std::size_t width = 0;
};

/// Coefficients in Mallat layout: the coarsest LL sits top-left.
struct Pyramid {
  std::size_t height = 0;
  std::size_t width = 0;
  int levels = 0;
  Filter filter = Filter::cdf97;
  std::vector<double> coeffs;

  double& at(std::size_t y, std::size_t x) { return coeffs[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return coeffs[y * width + x]; }

  /// Coarsest LL first, then HL/LH/HH from coarse to fine.
  std::vector<Subband> subbands() const;
};

/// One level of the 1-D transform in place: x[0..n) becomes n/2 low-pass
/// followed by n/2 high-pass samples. n must be even.
void lift_forward(std::vector<double>& x, Filter f);
void lift_inverse(std::vector<double>& x, Filter f);

Pyramid dwt_forward(const std::vector<double>& plane, std::size_t height, std::size_t width,
                    int levels, Filter f = Filter::cdf97);
Pyramid dwt_forward(const Image& x, int levels, Filter f = Filter::cdf97);
std::vector<double> dwt_inverse(const Pyramid& p);

/// Dead-zone quantizer: floor(|c| / step) with the sign of c.
std::int32_t deadzone_quantize(double c, double step);
/// Midpoint reconstruction, 0 for the zero bin.
double deadzone_dequantize(std::int32_t q, double step);
/// Step used for a subband given the finest-level step.
double subband_step(const Subband& s, int levels, double base_step);

struct BaselineResult {
  codec::Bitstream stream;
  double quant_step = 0.0;
  double ratio = 0.0;  // original bytes / total stream bytes
};

/// Encode at cfg.quant_step, or at the step that reaches cfg.target_ratio
/// within 5% when a target is set (throws ConfigError when unreachable).
BaselineResult encode_baseline(const Image& x, const WaveletConfig& cfg);
Image decode_baseline(const codec::Bitstream& b);

/// Ratio of 8-bit raw size to the full serialized stream size.
double compression_ratio(const Image& x, const codec::Bitstream& b);

// ---------------------------------------------------------------------------
// Results from external codecs (e.g. a real JPEG2000 encoder), one row per
// (image, codec, quality): image_id,codec,bytes,psnr,ssim. The codec field may
// carry the quality setting as "name@quality".

struct ExternalResult {
  std::string image_id;
  std::string codec;
  std::string quality;  // empty when the codec field has no "@"
  double bytes = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

std::vector<ExternalResult> parse_external_csv(const std::string& text);
std::vector<ExternalResult> read_external_csv(const std::filesystem::path& path);

}  // namespace fpc::wavelet
