#pragma once

// Fidelity metrics and Bjontegaard deltas between rate-distortion curves.

#include <limits>
#include <string>
#include <vector>

#include "fpc/image.hpp"

namespace fpc::quality {

/// PSNR of identical images.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// Mean squared error on the 8-bit scale.
double mse(const Image& a, const Image& b);
/// 10 log10(255^2 / MSE); kInfinitePsnr when the images are identical.
double psnr(const Image& a, const Image& b);
double psnr_from_mse(double mse);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Mean local SSIM over every fully contained Gaussian window.
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});

struct RDPoint {
  double rate_bpp = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct RDCurve {
  std::string label;
  std::vector<RDPoint> points;

  /// Sort by rate. Throws ArityError for fewer than 4 points and
  /// DimensionError for non-positive, repeated or non-finite values.
  void normalize();
};

enum class QualityKey { psnr, ssim };
const char* quality_key_name(QualityKey k);

struct BDResult {
  double bd_rate_percent = 0.0;  // negative = test needs fewer bits
  double bd_quality = 0.0;       // dB for PSNR, SSIM units otherwise
};

/// Classic Bjontegaard metrics: cubic fits of log10(rate) against quality and
/// of quality against log10(rate), integrated over the overlapping interval.
BDResult bd_metrics(const RDCurve& anchor, const RDCurve& test, QualityKey key = QualityKey::psnr);

double bd_rate(const RDCurve& anchor, const RDCurve& test, QualityKey key = QualityKey::psnr);
double bd_quality(const RDCurve& anchor, const RDCurve& test, QualityKey key = QualityKey::psnr);

}  // namespace fpc::quality
