#include "fpc/codec.hpp"

#include <zlib.h>

#include <cstring>

#include "fpc/errors.hpp"

namespace fpc::codec {

namespace {

constexpr char kMagic[4] = {'F', 'P', 'B', 'S'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get(std::span<const std::uint8_t> b, std::size_t& pos) {
  if (b.size() - pos < sizeof(T)) throw TruncatedError("bitstream truncated at byte " + std::to_string(pos));
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b[pos + i]) << (8 * i));
  pos += sizeof(T);
  return v;
}

std::uint32_t crc_of(std::span<const std::uint8_t> b) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), b.data(), static_cast<uInt>(b.size())));
}

std::vector<std::uint8_t> read_segment(std::span<const std::uint8_t> b, std::size_t& pos) {
  const auto n = get<std::uint32_t>(b, pos);
  if (b.size() - pos < n) throw TruncatedError("bitstream segment runs past the end");
  std::vector<std::uint8_t> s(b.begin() + static_cast<std::ptrdiff_t>(pos),
                              b.begin() + static_cast<std::ptrdiff_t>(pos + n));
  pos += n;
  return s;
}

}  // namespace

double Bitstream::bpp() const {
  const double pixels = static_cast<double>(header.height) * header.width;
  return pixels > 0 ? 8.0 * static_cast<double>(total_bytes()) / pixels : 0.0;
}

std::vector<std::uint8_t> serialize(const Bitstream& b) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.reserve(b.total_bytes());
  const auto& h = b.header;
  put(out, h.version);
  put(out, static_cast<std::uint8_t>(h.variant));
  put(out, h.model_hash);
  put(out, h.height);
  put(out, h.width);
  put(out, h.latent_channels);
  put(out, h.hyper_channels);
  put(out, static_cast<std::uint32_t>(b.z_stream.size()));
  out.insert(out.end(), b.z_stream.begin(), b.z_stream.end());
  put(out, static_cast<std::uint32_t>(b.y_stream.size()));
  out.insert(out.end(), b.y_stream.begin(), b.y_stream.end());
  put(out, crc_of(out));
  return out;
}

Bitstream parse_bitstream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw TruncatedError("bitstream shorter than its magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw BadMagicError("not an .fpbs bitstream");
  std::size_t pos = 4;
  Bitstream b;
  auto& h = b.header;
  h.version = get<std::uint16_t>(bytes, pos);
  if (h.version != kBitstreamVersion) {
    throw VersionMismatchError("bitstream version " + std::to_string(h.version) + ", expected " +
                               std::to_string(kBitstreamVersion));
  }
  const auto variant = get<std::uint8_t>(bytes, pos);
  if (variant > 1) throw FormatError("unknown bitstream variant " + std::to_string(variant));
  h.variant = static_cast<StreamVariant>(variant);
  h.model_hash = get<std::uint64_t>(bytes, pos);
  h.height = get<std::uint32_t>(bytes, pos);
  h.width = get<std::uint32_t>(bytes, pos);
  h.latent_channels = get<std::uint16_t>(bytes, pos);
  h.hyper_channels = get<std::uint16_t>(bytes, pos);
  b.z_stream = read_segment(bytes, pos);
  b.y_stream = read_segment(bytes, pos);
  const std::size_t body = pos;
  const auto crc = get<std::uint32_t>(bytes, pos);
  if (pos != bytes.size()) throw FormatError("trailing bytes after bitstream");
  if (crc != crc_of(bytes.first(body))) throw ChecksumError("bitstream CRC mismatch");
  return b;
}

LearnedCodec::LearnedCodec(model::ModelWeights weights)
    : weights_(std::move(weights)), hash_(model::weights_hash(weights_)) {
  weights_.validate();
}

EncodeResult LearnedCodec::encode(const Image& x) const {
  if (weights_.image_channels() != 1) {
    throw ModelMismatchError("weights are for " + std::to_string(weights_.image_channels()) +
                             "-channel images; input is grayscale");
  }
  const Tensor y = model::analysis(image_to_tensor(x), weights_);
  const Tensor z = model::hyper_analysis(y, weights_);

  EncodeResult r;
  r.z_hat = entropy::quantize(z);
  const auto params = model::hyper_synthesis(entropy::dequantize(r.z_hat), weights_);
  r.y_hat = entropy::quantize(y);

  const std::size_t per_channel = z.dim(1) * z.dim(2);
  r.stream.header = {kBitstreamVersion,
                     StreamVariant::learned,
                     hash_,
                     static_cast<std::uint32_t>(x.height()),
                     static_cast<std::uint32_t>(x.width()),
                     static_cast<std::uint16_t>(weights_.latent_channels),
                     static_cast<std::uint16_t>(weights_.hyper_channels)};
  r.stream.z_stream = entropy::encode_symbols(r.z_hat.values, weights_.prior, per_channel);
  r.stream.y_stream = entropy::encode_symbols(r.y_hat.values, params.mean.data(), params.scale.data());
  r.z_bits = entropy::hyper_bits(r.z_hat, weights_.prior);
  r.y_bits = entropy::latent_bits(r.y_hat, params.mean, params.scale);
  r.reconstruction = tensor_to_image(model::synthesis(entropy::dequantize(r.y_hat), weights_));
  return r;
}

Image LearnedCodec::decode(const Bitstream& b) const {
  const auto& h = b.header;
  if (h.variant != StreamVariant::learned) throw FormatError("not a learned-codec bitstream");
  if (h.model_hash != hash_) throw ModelMismatchError("bitstream was encoded with a different weight file");
  if (h.latent_channels != weights_.latent_channels || h.hyper_channels != weights_.hyper_channels) {
    throw ModelMismatchError("bitstream channel counts differ from the weights");
  }
  if (h.height == 0 || h.width == 0 || h.height % model::kSpatialMultiple != 0 ||
      h.width % model::kSpatialMultiple != 0) {
    throw FormatError("bitstream image extent is not a multiple of 64");
  }
  const std::size_t zh = h.height / 64, zw = h.width / 64;
  const std::size_t m = h.hyper_channels, n = h.latent_channels;
  entropy::IntTensor z_hat{{m, zh, zw}, {}};
  z_hat.values = entropy::decode_symbols(b.z_stream, weights_.prior, zh * zw, m * zh * zw);
  const auto params = model::hyper_synthesis(entropy::dequantize(z_hat), weights_);
  entropy::IntTensor y_hat{{n, zh * 4, zw * 4}, {}};
  y_hat.values = entropy::decode_symbols(b.y_stream, params.mean.data(), params.scale.data(), y_hat.shape[0] * y_hat.shape[1] * y_hat.shape[2]);
  return tensor_to_image(model::synthesis(entropy::dequantize(y_hat), weights_));
}

Bitstream encode(const Image& x, const model::ModelWeights& w) { return LearnedCodec(w).encode(x).stream; }

Image decode(const Bitstream& b, const model::ModelWeights& w) { return LearnedCodec(w).decode(b); }

double mse_unit(const Image& a, const Image& b) {
  if (a.height() != b.height() || a.width() != b.width()) throw DimensionError("image sizes differ");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = (static_cast<double>(a.pixels()[i]) - b.pixels()[i]) / 255.0;
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

RDLoss compose_rd_loss(float lambda, double mse, double rate_y, double rate_z) {
  if (!(lambda >= 0.0f)) throw ConfigError("lambda must be non-negative");
  RDLoss l{lambda, mse, kDistortionScale, rate_y, rate_z, 0.0};
  l.total = static_cast<double>(lambda) * kDistortionScale * mse + rate_y + rate_z;
  return l;
}

RDLoss rd_loss(const Image& x, const model::ModelWeights& w, float lambda) {
  if (!(lambda >= 0.0f)) throw ConfigError("lambda must be non-negative");
  const LearnedCodec codec(w);
  const EncodeResult r = codec.encode(x);
  return compose_rd_loss(lambda, mse_unit(x, r.reconstruction),
                         r.y_bits / static_cast<double>(r.y_hat.size()),
                         r.z_bits / static_cast<double>(r.z_hat.size()));
}

}  // namespace fpc::codec
