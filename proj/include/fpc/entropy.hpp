#pragma once

// Probability models and the range coder.
//
// All coding decisions are made on 16-bit integer cumulative frequency
// tables, so encoder and decoder agree bit-for-bit once they agree on which
// table to use. Symbols outside a table's range are sent through an escape
// symbol followed by a direction bit and an order-0 exp-Golomb code of the
// overshoot, each bit coded at probability 1/2. The layout of the byte
// stream is documented in docs/formats.md.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fpc/tensor.hpp"

namespace fpc::entropy {

constexpr int kPrecisionBits = 16;
constexpr std::uint32_t kTotalFrequency = 1u << kPrecisionBits;

/// Smallest scale the Gaussian conditional will use.
constexpr double kSigmaMin = 0.11;
/// Scales are quantized to this many geometric levels; level 18 is exactly 1.
constexpr int kScaleLevels = 64;
constexpr int kUnitScaleLevel = 18;
/// Means are split into round(mu) plus an offset quantized to 1/kMeanSteps.
constexpr int kMeanSteps = 32;
/// Widest symbol window (either side of the center) of a Gaussian table.
constexpr int kMaxHalfWidth = 1024;

struct IntTensor {
  std::vector<std::size_t> shape;
  std::vector<std::int32_t> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const IntTensor&, const IntTensor&) = default;
};

/// Nearest-integer rounding, halves away from zero.
std::int32_t quantize_value(float v);
IntTensor quantize(const Tensor& t);
/// Integer tensor back to floats (same shape).
Tensor dequantize(const IntTensor& t);

/// Cumulative frequency table over the symbols [offset, offset + n) plus a
/// trailing escape symbol; cdf has n + 2 entries, cdf[0] = 0 and
/// cdf.back() = kTotalFrequency.
struct CdfTable {
  std::int32_t offset = 0;
  std::vector<std::uint32_t> cdf;

  std::size_t symbol_count() const { return cdf.size() - 2; }
  std::uint32_t escape_index() const { return static_cast<std::uint32_t>(cdf.size() - 2); }
  std::uint32_t frequency(std::size_t index) const { return cdf[index + 1] - cdf[index]; }
  bool contains(std::int32_t v) const {
    return v >= offset && v < offset + static_cast<std::int32_t>(symbol_count());
  }

  /// Throws FormatError unless the table is strictly increasing from 0 to 2^16.
  void validate() const;

  friend bool operator==(const CdfTable&, const CdfTable&) = default;
};

/// Quantize a pmf over [offset, offset + pmf.size()) into a table. Every
/// symbol and the escape get at least frequency 1.
CdfTable make_cdf_table(std::span<const double> pmf, std::int32_t offset);

/// Ideal code length in bits of v under the table, escape bits included.
double code_length_bits(const CdfTable& table, std::int32_t v);

/// Per-channel position-independent model for the hyper-latents.
struct FactorizedPrior {
  std::vector<CdfTable> channels;

  void validate() const;
  friend bool operator==(const FactorizedPrior&, const FactorizedPrior&) = default;
};

/// Standard normal CDF.
double normal_cdf(double x);

/// P(k) = Phi((k + 0.5 - mu) / sigma) - Phi((k - 0.5 - mu) / sigma), with sigma
/// floored at kSigmaMin. `clamped` reports whether the floor was applied.
double gaussian_pmf(long k, double mu, double sigma, bool* clamped = nullptr);

/// Discretized Gaussian restricted to a symbol window whose end symbols
/// absorb the tails, so the window's masses sum to one.
class GaussianConditional {
 public:
  GaussianConditional(double mu, double sigma);

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  bool clamped() const { return clamped_; }
  std::int32_t center() const { return center_; }
  std::int32_t half_width() const { return half_width_; }
  std::int32_t lowest() const { return center_ - half_width_; }
  std::int32_t highest() const { return center_ + half_width_; }

  /// Folded probability of k; zero outside the window.
  double pmf(std::int32_t k) const;

 private:
  double mu_;
  double sigma_;
  bool clamped_ = false;
  std::int32_t center_;
  std::int32_t half_width_;
};

/// Window half width used for a given scale.
std::int32_t gaussian_half_width(double sigma);

/// Geometric scale grid shared by encoder and decoder.
double scale_level_value(int level);
int scale_level_for(double sigma);

/// The quantized parameters and integer table actually used to code one
/// latent. The table is relative to `center` (symbol = value - center).
struct GaussianModel {
  std::int32_t center = 0;
  int scale_level = 0;
  int mean_bin = 0;
  const CdfTable* table = nullptr;
};

/// Precomputed tables for every (scale level, mean bin) pair.
class GaussianTableBank {
 public:
  static const GaussianTableBank& instance();

  GaussianModel lookup(float mu, float sigma) const;
  const CdfTable& table(int scale_level, int mean_bin) const;

 private:
  GaussianTableBank();
  std::vector<CdfTable> tables_;
};

// ---------------------------------------------------------------------------
// Range coder: 64-bit low/range, byte-wise carry-less renormalization.

class RangeEncoder {
 public:
  void encode(std::uint32_t cum, std::uint32_t freq);
  void encode_bit(bool bit) { encode(bit ? kTotalFrequency / 2 : 0, kTotalFrequency / 2); }
  /// Encode v with the table, escaping when out of range.
  void encode_value(const CdfTable& table, std::int32_t v);
  /// Flush the shortest tail that pins the final interval and return the bytes.
  std::vector<std::uint8_t> finish();

 private:
  std::uint64_t low_ = 0;
  std::uint64_t range_ = ~std::uint64_t{0};
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);

  /// Cumulative-frequency target in [0, 2^16) for the next symbol.
  std::uint32_t target();
  void consume(std::uint32_t cum, std::uint32_t freq);
  bool decode_bit();
  std::int32_t decode_value(const CdfTable& table);
  /// Throws DecodeError unless the stream ended exactly where the encoder stopped.
  void finish();

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::size_t shifts_ = 0;
  std::uint64_t low_ = 0;
  std::uint64_t range_ = ~std::uint64_t{0};
  std::uint64_t code_ = 0;
};

// ---------------------------------------------------------------------------
// Stream-level coding of symbol sequences.

/// Every symbol coded with the same table.
std::vector<std::uint8_t> encode_symbols(std::span<const std::int32_t> symbols,
                                         const CdfTable& table);
std::vector<std::int32_t> decode_symbols(std::span<const std::uint8_t> bytes,
                                         const CdfTable& table, std::size_t count);

/// Channel-major symbols, `per_channel` consecutive symbols per prior channel.
std::vector<std::uint8_t> encode_symbols(std::span<const std::int32_t> symbols,
                                         const FactorizedPrior& prior, std::size_t per_channel);
std::vector<std::int32_t> decode_symbols(std::span<const std::uint8_t> bytes,
                                         const FactorizedPrior& prior, std::size_t per_channel,
                                         std::size_t count);

/// One Gaussian conditional per symbol.
std::vector<std::uint8_t> encode_symbols(std::span<const std::int32_t> symbols,
                                         std::span<const float> mu, std::span<const float> sigma);
std::vector<std::int32_t> decode_symbols(std::span<const std::uint8_t> bytes,
                                         std::span<const float> mu, std::span<const float> sigma,
                                         std::size_t count);

// ---------------------------------------------------------------------------
// Rate estimates: -sum log2 P over the elements, divided by the element count.
// P is the exact coding model, so these predict the coder's output length.

double hyper_bits(const IntTensor& z_hat, const FactorizedPrior& prior);
double latent_bits(const IntTensor& y_hat, const Tensor& mu, const Tensor& sigma);

double rate_hyper(const IntTensor& z_hat, const FactorizedPrior& prior);
double rate_latent(const IntTensor& y_hat, const Tensor& mu, const Tensor& sigma);

}  // namespace fpc::entropy
