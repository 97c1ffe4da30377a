#include "fpc/entropy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "fpc/errors.hpp"

namespace fpc::entropy {

std::int32_t quantize_value(float v) {
  constexpr float kLimit = 1.0e9f;
  return static_cast<std::int32_t>(std::round(std::clamp(v, -kLimit, kLimit)));
}

IntTensor quantize(const Tensor& t) {
  IntTensor q{t.shape(), std::vector<std::int32_t>(t.size())};
  for (std::size_t i = 0; i < t.size(); ++i) q.values[i] = quantize_value(t[i]);
  return q;
}

Tensor dequantize(const IntTensor& t) {
  std::vector<float> v(t.values.begin(), t.values.end());
  return Tensor(t.shape, std::move(v));
}

// ---------------------------------------------------------------------------
// Tables

void CdfTable::validate() const {
  if (cdf.size() < 2) throw FormatError("cdf table needs at least the escape symbol");
  if (cdf.front() != 0) throw FormatError("cdf table must start at 0");
  if (cdf.back() != kTotalFrequency) throw FormatError("cdf table must end at 2^16");
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    if (cdf[i] <= cdf[i - 1]) throw FormatError("cdf table is not strictly increasing");
  }
}

void FactorizedPrior::validate() const {
  for (const auto& c : channels) c.validate();
}

CdfTable make_cdf_table(std::span<const double> pmf, std::int32_t offset) {
  const std::size_t entries = pmf.size() + 1;  // + escape
  if (entries > kTotalFrequency) throw FormatError("too many symbols for 16-bit precision");
  double mass = 0.0;
  for (double p : pmf) mass += std::max(p, 0.0);

  const std::uint32_t spare = kTotalFrequency - static_cast<std::uint32_t>(entries);
  std::vector<std::uint32_t> freq(entries, 1);
  std::vector<double> frac(entries, 0.0);
  std::uint32_t assigned = 0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    const double share = mass > 0.0 ? std::max(pmf[i], 0.0) / mass * spare : 0.0;
    const auto whole = static_cast<std::uint32_t>(std::floor(share));
    freq[i] += whole;
    frac[i] = share - whole;
    assigned += whole;
  }
  // Hand out what rounding left over, largest fractional part first.
  std::uint32_t remaining = spare - assigned;
  std::vector<std::size_t> order(entries);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; remaining > 0; i = (i + 1) % entries, --remaining) ++freq[order[i]];

  CdfTable t;
  t.offset = offset;
  t.cdf.resize(entries + 1);
  t.cdf[0] = 0;
  for (std::size_t i = 0; i < entries; ++i) t.cdf[i + 1] = t.cdf[i] + freq[i];
  return t;
}

namespace {

constexpr int kMaxEscapeBits = 32;

// Overshoot past the table edge and the direction bit (true = above).
std::pair<bool, std::uint32_t> escape_split(const CdfTable& table, std::int32_t v) {
  if (v < table.offset) {
    return {false, static_cast<std::uint32_t>(static_cast<std::int64_t>(table.offset) - 1 - v)};
  }
  const std::int64_t top = static_cast<std::int64_t>(table.offset) +
                           static_cast<std::int64_t>(table.symbol_count());
  return {true, static_cast<std::uint32_t>(static_cast<std::int64_t>(v) - top)};
}

int expgolomb_prefix(std::uint32_t d) {
  return static_cast<int>(std::bit_width(static_cast<std::uint64_t>(d) + 1)) - 1;
}

}  // namespace

double code_length_bits(const CdfTable& table, std::int32_t v) {
  if (table.contains(v)) {
    const auto idx = static_cast<std::size_t>(v - table.offset);
    return -std::log2(static_cast<double>(table.frequency(idx)) / kTotalFrequency);
  }
  const auto [above, d] = escape_split(table, v);
  (void)above;
  const double esc = -std::log2(static_cast<double>(table.frequency(table.escape_index())) /
                                kTotalFrequency);
  return esc + 1.0 + 2.0 * expgolomb_prefix(d) + 1.0;
}

// ---------------------------------------------------------------------------
// Gaussian conditional

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double gaussian_pmf(long k, double mu, double sigma, bool* clamped) {
  const bool floor_hit = !(sigma >= kSigmaMin);
  if (clamped) *clamped = floor_hit;
  if (floor_hit) sigma = kSigmaMin;
  const double upper = (static_cast<double>(k) + 0.5 - mu) / sigma;
  const double lower = (static_cast<double>(k) - 0.5 - mu) / sigma;
  // Evaluate on the side where the tail is small to keep precision.
  if (lower > 0.0) return 0.5 * (std::erfc(lower / std::sqrt(2.0)) - std::erfc(upper / std::sqrt(2.0)));
  return normal_cdf(upper) - normal_cdf(lower);
}

std::int32_t gaussian_half_width(double sigma) {
  const double w = std::ceil(8.0 * std::max(sigma, kSigmaMin));
  return static_cast<std::int32_t>(std::clamp(w, 2.0, static_cast<double>(kMaxHalfWidth)));
}

GaussianConditional::GaussianConditional(double mu, double sigma)
    : mu_(mu), sigma_(sigma), center_(quantize_value(static_cast<float>(mu))) {
  if (!(sigma_ >= kSigmaMin)) {
    sigma_ = kSigmaMin;
    clamped_ = true;
  }
  half_width_ = gaussian_half_width(sigma_);
}

double GaussianConditional::pmf(std::int32_t k) const {
  if (k < lowest() || k > highest()) return 0.0;
  const double hi = (k + 0.5 - mu_) / sigma_;
  const double lo = (k - 0.5 - mu_) / sigma_;
  if (k == lowest() && k == highest()) return 1.0;
  if (k == lowest()) return normal_cdf(hi);
  if (k == highest()) return 0.5 * std::erfc(lo / std::sqrt(2.0));
  return gaussian_pmf(k, mu_, sigma_);
}

namespace {
const double kScaleStep = std::log(1.0 / kSigmaMin) / kUnitScaleLevel;
}

double scale_level_value(int level) { return kSigmaMin * std::exp(level * kScaleStep); }

int scale_level_for(double sigma) {
  if (!(sigma > kSigmaMin)) return 0;
  const double l = std::round(std::log(sigma / kSigmaMin) / kScaleStep);
  return static_cast<int>(std::clamp(l, 0.0, static_cast<double>(kScaleLevels - 1)));
}

GaussianTableBank::GaussianTableBank() {
  tables_.reserve(static_cast<std::size_t>(kScaleLevels) * (kMeanSteps + 1));
  for (int level = 0; level < kScaleLevels; ++level) {
    const double sigma = scale_level_value(level);
    for (int bin = 0; bin <= kMeanSteps; ++bin) {
      const double mu = static_cast<double>(bin) / kMeanSteps - 0.5;
      GaussianConditional g(mu, sigma);
      // center of the quantized model is always 0 here; symbols are relative.
      const std::int32_t w = g.half_width();
      std::vector<double> pmf;
      pmf.reserve(static_cast<std::size_t>(2 * w + 1));
      for (std::int32_t k = -w; k <= w; ++k) {
        if (k == -w) {
          pmf.push_back(normal_cdf((k + 0.5 - mu) / sigma));
        } else if (k == w) {
          pmf.push_back(0.5 * std::erfc(((k - 0.5 - mu) / sigma) / std::sqrt(2.0)));
        } else {
          pmf.push_back(gaussian_pmf(k, mu, sigma));
        }
      }
      tables_.push_back(make_cdf_table(pmf, -w));
    }
  }
}

const GaussianTableBank& GaussianTableBank::instance() {
  static const GaussianTableBank bank;
  return bank;
}

const CdfTable& GaussianTableBank::table(int scale_level, int mean_bin) const {
  return tables_[static_cast<std::size_t>(scale_level) * (kMeanSteps + 1) +
                 static_cast<std::size_t>(mean_bin)];
}

GaussianModel GaussianTableBank::lookup(float mu, float sigma) const {
  GaussianModel m;
  m.center = quantize_value(mu);
  const double offset = static_cast<double>(mu) - m.center;
  m.mean_bin = static_cast<int>(std::clamp(std::lround((offset + 0.5) * kMeanSteps), 0L,
                                           static_cast<long>(kMeanSteps)));
  m.scale_level = scale_level_for(sigma);
  m.table = &table(m.scale_level, m.mean_bin);
  return m;
}

// ---------------------------------------------------------------------------
// Range coder

namespace {
constexpr std::uint64_t kTop = std::uint64_t{1} << 56;
constexpr std::uint64_t kBottom = std::uint64_t{1} << 48;
}  // namespace

void RangeEncoder::encode(std::uint32_t cum, std::uint32_t freq) {
  const std::uint64_t r = range_ >> kPrecisionBits;
  low_ += r * cum;
  range_ = r * freq;
  for (;;) {
    if ((low_ ^ (low_ + range_)) >= kTop) {
      if (range_ >= kBottom) break;
      range_ = (0 - low_) & (kBottom - 1);
    }
    out_.push_back(static_cast<std::uint8_t>(low_ >> 56));
    low_ <<= 8;
    range_ <<= 8;
  }
}

void RangeEncoder::encode_value(const CdfTable& table, std::int32_t v) {
  if (table.contains(v)) {
    const auto idx = static_cast<std::size_t>(v - table.offset);
    encode(table.cdf[idx], table.frequency(idx));
    return;
  }
  const auto [above, d] = escape_split(table, v);
  const int n = expgolomb_prefix(d);
  if (n > kMaxEscapeBits) throw Error("value too far outside the coding table");
  const std::uint32_t esc = table.escape_index();
  encode(table.cdf[esc], table.frequency(esc));
  encode_bit(above);
  for (int i = 0; i < n; ++i) encode_bit(false);
  const std::uint64_t code = static_cast<std::uint64_t>(d) + 1;
  for (int i = n; i >= 0; --i) encode_bit(((code >> i) & 1u) != 0);
}

namespace {

// Number of leading bytes of the smallest value in [low, low + range) whose
// remaining bytes are all zero; the decoder pads with zeros.
int flush_length(std::uint64_t low, std::uint64_t range) {
  for (int n = 0; n < 8; ++n) {
    const int shift = 64 - 8 * n;
    const std::uint64_t unit_mask = shift == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << shift) - 1;
    const std::uint64_t v = (low + unit_mask) & ~unit_mask;
    if (v - low < range) return n;
  }
  return 8;
}

}  // namespace

std::vector<std::uint8_t> RangeEncoder::finish() {
  const int n = flush_length(low_, range_);
  if (n > 0) {
    const int shift = 64 - 8 * n;
    const std::uint64_t unit_mask = (std::uint64_t{1} << shift) - 1;
    std::uint64_t v = (low_ + unit_mask) & ~unit_mask;
    for (int i = 0; i < n; ++i, v <<= 8) out_.push_back(static_cast<std::uint8_t>(v >> 56));
  }
  std::vector<std::uint8_t> bytes = std::move(out_);
  out_.clear();
  low_ = 0;
  range_ = ~std::uint64_t{0};
  return bytes;
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 8; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  const std::size_t at = pos_++;
  if (at < bytes_.size()) return bytes_[at];
  // Past the end the encoder's implicit zero padding applies, but never more
  // than the eight bytes of decoder lookahead.
  if (at >= bytes_.size() + 8) throw DecodeError("range decoder ran past the end of the stream");
  return 0;
}

std::uint32_t RangeDecoder::target() {
  const std::uint64_t r = range_ >> kPrecisionBits;
  const std::uint64_t t = (code_ - low_) / r;
  if (t >= kTotalFrequency) throw DecodeError("range decoder state is outside the interval");
  return static_cast<std::uint32_t>(t);
}

void RangeDecoder::consume(std::uint32_t cum, std::uint32_t freq) {
  const std::uint64_t r = range_ >> kPrecisionBits;
  low_ += r * cum;
  range_ = r * freq;
  for (;;) {
    if ((low_ ^ (low_ + range_)) >= kTop) {
      if (range_ >= kBottom) break;
      range_ = (0 - low_) & (kBottom - 1);
    }
    code_ = (code_ << 8) | next_byte();
    low_ <<= 8;
    range_ <<= 8;
    ++shifts_;
  }
}

bool RangeDecoder::decode_bit() {
  const bool bit = target() >= kTotalFrequency / 2;
  consume(bit ? kTotalFrequency / 2 : 0, kTotalFrequency / 2);
  return bit;
}

std::int32_t RangeDecoder::decode_value(const CdfTable& table) {
  const std::uint32_t t = target();
  // First entry strictly greater than t, minus one, is the symbol.
  const auto it = std::upper_bound(table.cdf.begin(), table.cdf.end(), t);
  const auto idx = static_cast<std::uint32_t>(std::distance(table.cdf.begin(), it) - 1);
  consume(table.cdf[idx], table.frequency(idx));
  if (idx != table.escape_index()) return table.offset + static_cast<std::int32_t>(idx);

  const bool above = decode_bit();
  int n = 0;
  while (!decode_bit()) {
    if (++n > kMaxEscapeBits) throw DecodeError("escape code too long");
  }
  std::uint64_t code = 1;
  for (int i = 0; i < n; ++i) code = (code << 1) | (decode_bit() ? 1u : 0u);
  const std::int64_t d = static_cast<std::int64_t>(code - 1);
  const std::int64_t v =
      above ? static_cast<std::int64_t>(table.offset) + static_cast<std::int64_t>(table.symbol_count()) + d
            : static_cast<std::int64_t>(table.offset) - 1 - d;
  if (v < INT32_MIN || v > INT32_MAX) throw DecodeError("escaped value out of range");
  return static_cast<std::int32_t>(v);
}

void RangeDecoder::finish() {
  const std::size_t expected = shifts_ + static_cast<std::size_t>(flush_length(low_, range_));
  if (expected != bytes_.size()) {
    throw DecodeError("stream length " + std::to_string(bytes_.size()) +
                      " does not match the decoded content (" + std::to_string(expected) + ")");
  }
}

// ---------------------------------------------------------------------------
// Streams

std::vector<std::uint8_t> encode_symbols(std::span<const std::int32_t> symbols,
                                         const CdfTable& table) {
  RangeEncoder enc;
  for (std::int32_t s : symbols) enc.encode_value(table, s);
  return enc.finish();
}

std::vector<std::int32_t> decode_symbols(std::span<const std::uint8_t> bytes,
                                         const CdfTable& table, std::size_t count) {
  RangeDecoder dec(bytes);
  std::vector<std::int32_t> out(count);
  for (auto& v : out) v = dec.decode_value(table);
  dec.finish();
  return out;
}

namespace {

const CdfTable& prior_channel(const FactorizedPrior& prior, std::size_t i, std::size_t per_channel) {
  const std::size_t c = per_channel ? i / per_channel : 0;
  if (c >= prior.channels.size()) throw DimensionError("more hyper-latent channels than prior tables");
  return prior.channels[c];
}

}  // namespace

std::vector<std::uint8_t> encode_symbols(std::span<const std::int32_t> symbols,
                                         const FactorizedPrior& prior, std::size_t per_channel) {
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    enc.encode_value(prior_channel(prior, i, per_channel), symbols[i]);
  }
  return enc.finish();
}

std::vector<std::int32_t> decode_symbols(std::span<const std::uint8_t> bytes,
                                         const FactorizedPrior& prior, std::size_t per_channel,
                                         std::size_t count) {
  RangeDecoder dec(bytes);
  std::vector<std::int32_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = dec.decode_value(prior_channel(prior, i, per_channel));
  }
  dec.finish();
  return out;
}

std::vector<std::uint8_t> encode_symbols(std::span<const std::int32_t> symbols,
                                         std::span<const float> mu, std::span<const float> sigma) {
  if (mu.size() < symbols.size() || sigma.size() < symbols.size()) {
    throw DimensionError("gaussian parameters shorter than the symbol sequence");
  }
  const auto& bank = GaussianTableBank::instance();
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const GaussianModel m = bank.lookup(mu[i], sigma[i]);
    enc.encode_value(*m.table, static_cast<std::int32_t>(static_cast<std::int64_t>(symbols[i]) - m.center));
  }
  return enc.finish();
}

std::vector<std::int32_t> decode_symbols(std::span<const std::uint8_t> bytes,
                                         std::span<const float> mu, std::span<const float> sigma,
                                         std::size_t count) {
  if (mu.size() < count || sigma.size() < count) {
    throw DimensionError("gaussian parameters shorter than the symbol count");
  }
  const auto& bank = GaussianTableBank::instance();
  RangeDecoder dec(bytes);
  std::vector<std::int32_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const GaussianModel m = bank.lookup(mu[i], sigma[i]);
    out[i] = dec.decode_value(*m.table) + m.center;
  }
  dec.finish();
  return out;
}

// ---------------------------------------------------------------------------
// Rates

double hyper_bits(const IntTensor& z_hat, const FactorizedPrior& prior) {
  if (z_hat.shape.empty()) return 0.0;
  const std::size_t channels = z_hat.shape[0];
  if (channels > prior.channels.size()) {
    throw DimensionError("hyper-latents have " + std::to_string(channels) +
                         " channels, prior has " + std::to_string(prior.channels.size()));
  }
  const std::size_t per_channel = channels ? z_hat.size() / channels : 0;
  double bits = 0.0;
  for (std::size_t i = 0; i < z_hat.size(); ++i) {
    bits += code_length_bits(prior.channels[i / per_channel], z_hat.values[i]);
  }
  return bits;
}

double latent_bits(const IntTensor& y_hat, const Tensor& mu, const Tensor& sigma) {
  if (mu.shape() != y_hat.shape || sigma.shape() != y_hat.shape) {
    throw DimensionError("latent, mean and scale shapes differ");
  }
  const auto& bank = GaussianTableBank::instance();
  double bits = 0.0;
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    const GaussianModel m = bank.lookup(mu[i], sigma[i]);
    bits += code_length_bits(*m.table, y_hat.values[i] - m.center);
  }
  return bits;
}

double rate_hyper(const IntTensor& z_hat, const FactorizedPrior& prior) {
  return z_hat.size() ? hyper_bits(z_hat, prior) / static_cast<double>(z_hat.size()) : 0.0;
}

double rate_latent(const IntTensor& y_hat, const Tensor& mu, const Tensor& sigma) {
  return y_hat.size() ? latent_bits(y_hat, mu, sigma) / static_cast<double>(y_hat.size()) : 0.0;
}

}  // namespace fpc::entropy
