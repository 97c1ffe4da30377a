#include "fpc/model.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fpc/errors.hpp"

namespace fpc::model {

bool lambda_on_grid(float lambda) {
  return std::any_of(kLambdaGrid.begin(), kLambdaGrid.end(),
                     [&](float g) { return std::abs(g - lambda) <= 1e-6f * g; });
}

const char* transform_name(TransformId id) {
  switch (id) {
    case TransformId::analysis: return "analysis";
    case TransformId::synthesis: return "synthesis";
    case TransformId::hyper_analysis: return "hyper_analysis";
    case TransformId::hyper_synthesis: return "hyper_synthesis";
  }
  return "?";
}

int TransformSpec::downsampling() const {
  int f = 1;
  for (const auto& l : layers)
    if (l.kind == LayerKind::conv) f *= l.stride;
  return f;
}

int TransformSpec::upsampling() const {
  int f = 1;
  for (const auto& l : layers)
    if (l.kind == LayerKind::conv_transpose) f *= l.stride;
  return f;
}

TransformSpec standard_spec(TransformId id, int n, int m, int image_channels) {
  const LayerSpec act{LayerKind::activation, 0, 0, 0, 1, 0, 0};
  auto conv = [](int in, int out, int k, int s) {
    return LayerSpec{LayerKind::conv, in, out, k, s, k / 2, 0};
  };
  auto deconv = [](int in, int out, int k, int s) {
    return LayerSpec{LayerKind::conv_transpose, in, out, k, s, k / 2, s - 1};
  };
  TransformSpec t;
  switch (id) {
    case TransformId::analysis:
      t.layers = {conv(image_channels, n, 5, 2), act, conv(n, n, 5, 2), act,
                  conv(n, n, 5, 2),              act, conv(n, n, 5, 2)};
      break;
    case TransformId::synthesis:
      t.layers = {deconv(n, n, 5, 2), act, deconv(n, n, 5, 2), act,
                  deconv(n, n, 5, 2), act, deconv(n, image_channels, 5, 2)};
      break;
    case TransformId::hyper_analysis:
      t.layers = {conv(n, m, 3, 1), act, conv(m, m, 5, 2), act, conv(m, m, 5, 2)};
      break;
    case TransformId::hyper_synthesis:
      t.layers = {deconv(m, m, 5, 2), act, deconv(m, m, 5, 2), act, deconv(m, 2 * n, 3, 1)};
      break;
  }
  return t;
}

namespace {

std::vector<std::size_t> weight_shape(const LayerSpec& s) {
  const auto k = static_cast<std::size_t>(s.kernel);
  const auto in = static_cast<std::size_t>(s.in_channels);
  const auto out = static_cast<std::size_t>(s.out_channels);
  if (s.kind == LayerKind::conv) return {out, in, k, k};
  return {in, out, k, k};
}

void fail_shape(TransformId id, std::size_t layer, const std::string& what) {
  throw InconsistentShapeError(std::string(transform_name(id)) + " layer " +
                               std::to_string(layer) + ": " + what);
}

void validate_transform(TransformId id, const std::vector<Layer>& layers, int in_ch, int out_ch,
                        int down, int up) {
  if (layers.empty()) fail_shape(id, 0, "transform has no layers");
  int channels = in_ch;
  int d = 1, u = 1;
  bool prev_activation = true;  // no activation allowed first
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const auto& s = l.spec;
    if (s.kind == LayerKind::activation) {
      if (prev_activation) fail_shape(id, i, "activation must sit between two convolutions");
      if (!l.weight.shape().empty() || !l.bias.empty()) fail_shape(id, i, "activation carries parameters");
      prev_activation = true;
      continue;
    }
    prev_activation = false;
    if (s.in_channels != channels) {
      fail_shape(id, i, "expects " + std::to_string(s.in_channels) + " input channels, gets " +
                            std::to_string(channels));
    }
    if (s.kernel <= 0 || s.kernel % 2 == 0) fail_shape(id, i, "kernel must be odd");
    if (s.stride < 1 || s.padding < 0) fail_shape(id, i, "bad stride or padding");
    if (s.kind == LayerKind::conv_transpose && s.output_padding >= s.stride) {
      fail_shape(id, i, "output_padding must be < stride");
    }
    if (s.kind == LayerKind::conv && s.output_padding != 0) fail_shape(id, i, "conv has output_padding");
    if (l.weight.shape() != weight_shape(s)) {
      fail_shape(id, i, "weight tensor " + l.weight.shape_string() + " does not match layer spec");
    }
    if (l.bias.size() != static_cast<std::size_t>(s.out_channels)) fail_shape(id, i, "bias length");
    // Same-padding geometry so that extents scale exactly by the stride.
    if (s.padding != s.kernel / 2) fail_shape(id, i, "padding must be kernel/2");
    if (s.kind == LayerKind::conv_transpose && s.output_padding != s.stride - 1) {
      fail_shape(id, i, "output_padding must be stride-1");
    }
    (s.kind == LayerKind::conv ? d : u) *= s.stride;
    channels = s.out_channels;
  }
  if (prev_activation) fail_shape(id, layers.size() - 1, "transform ends in an activation");
  if (channels != out_ch) {
    fail_shape(id, layers.size() - 1, "produces " + std::to_string(channels) + " channels, expected " +
                                          std::to_string(out_ch));
  }
  if (d != down || u != up) {
    fail_shape(id, layers.size() - 1,
               "resamples by " + std::to_string(d) + "/" + std::to_string(u) + ", expected " +
                   std::to_string(down) + "/" + std::to_string(up));
  }
}

}  // namespace

void ModelWeights::validate() const {
  const int c = image_channels();
  const int n = latent_channels, m = hyper_channels;
  if (n <= 0 || m <= 0) throw InconsistentShapeError("channel counts must be positive");
  validate_transform(TransformId::analysis, layers(TransformId::analysis), c, n, 16, 1);
  validate_transform(TransformId::synthesis, layers(TransformId::synthesis), n, c, 1, 16);
  validate_transform(TransformId::hyper_analysis, layers(TransformId::hyper_analysis), n, m, 4, 1);
  validate_transform(TransformId::hyper_synthesis, layers(TransformId::hyper_synthesis), m, 2 * n, 1, 4);
  if (prior.channels.size() != static_cast<std::size_t>(m)) {
    throw InconsistentShapeError("prior has " + std::to_string(prior.channels.size()) +
                                 " channel tables, model has M=" + std::to_string(m));
  }
  try {
    prior.validate();
  } catch (const FormatError& e) {
    throw InconsistentShapeError(std::string("prior table: ") + e.what());
  }
  if (!(lambda_tag == 0.0f || lambda_on_grid(lambda_tag))) {
    throw InconsistentShapeError("lambda tag " + std::to_string(lambda_tag) +
                                 " is neither 0 nor on the training grid");
  }
  if (!(negative_slope >= 0.0f && negative_slope <= 1.0f)) {
    throw InconsistentShapeError("negative slope must lie in [0, 1]");
  }
}

float SeedSequence::next(float amplitude) {
  state_ = state_ * 6364136223846793005ull + 1442695040888963407ull;
  const double u = static_cast<double>(state_ >> 40) / static_cast<double>(1u << 24);
  return static_cast<float>((2.0 * u - 1.0) * amplitude);
}

ModelWeights make_seed_weights(const SeedOptions& o) {
  ModelWeights w;
  w.latent_channels = o.latent_channels;
  w.hyper_channels = o.hyper_channels;
  w.model_id = "seed-" + std::to_string(o.seed) + "-N" + std::to_string(o.latent_channels) + "-M" +
               std::to_string(o.hyper_channels) + (o.zero_weights ? "-zero" : "");
  SeedSequence seq(o.seed);
  for (int t = 0; t < 4; ++t) {
    const auto id = static_cast<TransformId>(t);
    const TransformSpec spec = standard_spec(id, o.latent_channels, o.hyper_channels);
    for (const auto& s : spec.layers) {
      Layer layer{s, Tensor{}, {}};
      if (s.kind != LayerKind::activation) {
        layer.weight = Tensor(weight_shape(s));
        if (!o.zero_weights) {
          for (float& v : layer.weight.data()) v = seq.next(o.amplitude);
        }
        layer.bias.assign(static_cast<std::size_t>(s.out_channels), o.bias);
      }
      w.layers(id).push_back(std::move(layer));
    }
  }
  // Discretized unit-scale Gaussian on [-64, 64] for every channel.
  std::vector<double> pmf;
  for (int k = -64; k <= 64; ++k) {
    pmf.push_back(k == -64 ? entropy::normal_cdf(k + 0.5)
                  : k == 64 ? 1.0 - entropy::normal_cdf(k - 0.5)
                            : entropy::gaussian_pmf(k, 0.0, 1.0));
  }
  const entropy::CdfTable table = entropy::make_cdf_table(pmf, -64);
  w.prior.channels.assign(static_cast<std::size_t>(o.hyper_channels), table);
  return w;
}

Tensor run_transform(const Tensor& input, const std::vector<Layer>& layers, float negative_slope) {
  Tensor x = input;
  for (const auto& l : layers) {
    const auto& s = l.spec;
    switch (s.kind) {
      case LayerKind::conv:
        x = conv2d(x, l.weight, l.bias, static_cast<std::size_t>(s.stride),
                   static_cast<std::size_t>(s.padding));
        break;
      case LayerKind::conv_transpose:
        x = conv_transpose2d(x, l.weight, l.bias, static_cast<std::size_t>(s.stride),
                             static_cast<std::size_t>(s.padding),
                             static_cast<std::size_t>(s.output_padding));
        break;
      case LayerKind::activation:
        leaky_relu_inplace(x, negative_slope);
        break;
    }
  }
  if (!x.all_finite()) throw NumericError("transform produced a non-finite value");
  return x;
}

namespace {

void expect_chw(const Tensor& t, std::size_t channels, const char* what) {
  if (t.rank() != 3) throw DimensionError(std::string(what) + " must be (C, H, W), got " + t.shape_string());
  if (t.dim(0) != channels) {
    throw DimensionError(std::string(what) + " has " + std::to_string(t.dim(0)) +
                         " channels, weights expect " + std::to_string(channels));
  }
}

}  // namespace

Tensor analysis(const Tensor& x, const ModelWeights& w) {
  expect_chw(x, static_cast<std::size_t>(w.image_channels()), "analysis input");
  if (x.dim(1) % kSpatialMultiple != 0 || x.dim(2) % kSpatialMultiple != 0 || x.dim(1) == 0 ||
      x.dim(2) == 0) {
    throw DimensionError("image is " + std::to_string(x.dim(1)) + "x" + std::to_string(x.dim(2)) +
                         "; height and width must be multiples of 64 (center-crop first)");
  }
  return run_transform(x, w.layers(TransformId::analysis), w.negative_slope);
}

Tensor synthesis(const Tensor& y_hat, const ModelWeights& w) {
  expect_chw(y_hat, static_cast<std::size_t>(w.latent_channels), "latents");
  Tensor x = run_transform(y_hat, w.layers(TransformId::synthesis), w.negative_slope);
  for (float& v : x.data()) v = std::clamp(v, 0.0f, 1.0f);
  return x;
}

Tensor hyper_analysis(const Tensor& y, const ModelWeights& w) {
  expect_chw(y, static_cast<std::size_t>(w.latent_channels), "latents");
  if (y.dim(1) % 4 != 0 || y.dim(2) % 4 != 0) {
    throw DimensionError("latent extent " + y.shape_string() + " is not divisible by 4");
  }
  return run_transform(y, w.layers(TransformId::hyper_analysis), w.negative_slope);
}

EntropyParameters hyper_synthesis(const Tensor& z_hat, const ModelWeights& w) {
  expect_chw(z_hat, static_cast<std::size_t>(w.hyper_channels), "hyper-latents");
  const Tensor out = run_transform(z_hat, w.layers(TransformId::hyper_synthesis), w.negative_slope);
  const std::size_t n = static_cast<std::size_t>(w.latent_channels);
  const std::size_t plane = out.dim(1) * out.dim(2);
  EntropyParameters p{Tensor::chw(n, out.dim(1), out.dim(2)), Tensor::chw(n, out.dim(1), out.dim(2))};
  std::copy_n(out.raw(), n * plane, p.mean.raw());
  const float floor = static_cast<float>(entropy::kSigmaMin);
  for (std::size_t i = 0; i < n * plane; ++i) {
    const float raw = std::min(out[n * plane + i], 20.0f);
    p.scale[i] = std::max(std::exp(raw), floor);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Serialization (little-endian, see docs/formats.md)

namespace {

constexpr char kMagic[4] = {'F', 'P', 'M', 'W'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    using U = std::make_unsigned_t<T>;
    U u;
    std::memcpy(&u, &v, sizeof u);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : buf(b) {}
  void need(std::size_t n) const {
    if (buf.size() - pos < n) {
      throw TruncatedError("weight file truncated at byte " + std::to_string(pos) + " (need " +
                           std::to_string(n) + " more)");
    }
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<std::make_unsigned_t<T>>(buf[pos + i]) << (8 * i));
    }
    pos += sizeof(T);
    T v;
    std::memcpy(&v, &u, sizeof v);
    return v;
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  void floats(std::span<float> dst) {
    need(dst.size() * 4);
    for (float& v : dst) v = f32();
  }
  std::span<const std::uint8_t> buf;
  std::size_t pos = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> b) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < b.size()) {
    const std::size_t n = std::min<std::size_t>(b.size() - off, 1u << 30);
    c = crc32(c, b.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(c);
}

}  // namespace

std::vector<std::uint8_t> save_weights(const ModelWeights& w) {
  Writer wr;
  wr.bytes(kMagic, 4);
  wr.le<std::uint32_t>(kWeightFormatVersion);
  wr.le<std::uint8_t>(static_cast<std::uint8_t>(w.variant));
  wr.le<std::uint16_t>(static_cast<std::uint16_t>(w.latent_channels));
  wr.le<std::uint16_t>(static_cast<std::uint16_t>(w.hyper_channels));
  wr.f32(w.lambda_tag);
  wr.f32(w.negative_slope);
  wr.le<std::uint16_t>(static_cast<std::uint16_t>(w.model_id.size()));
  wr.bytes(w.model_id.data(), w.model_id.size());
  std::uint32_t count = 0;
  for (const auto& t : w.transforms) count += static_cast<std::uint32_t>(t.size());
  wr.le<std::uint32_t>(count);
  for (std::size_t t = 0; t < w.transforms.size(); ++t) {
    for (const auto& l : w.transforms[t]) {
      const auto& s = l.spec;
      wr.le<std::uint8_t>(static_cast<std::uint8_t>(t));
      wr.le<std::uint8_t>(static_cast<std::uint8_t>(s.kind));
      wr.le<std::uint16_t>(static_cast<std::uint16_t>(s.in_channels));
      wr.le<std::uint16_t>(static_cast<std::uint16_t>(s.out_channels));
      wr.le<std::uint8_t>(static_cast<std::uint8_t>(s.kernel));
      wr.le<std::uint8_t>(static_cast<std::uint8_t>(s.stride));
      wr.le<std::uint8_t>(static_cast<std::uint8_t>(s.padding));
      wr.le<std::uint8_t>(static_cast<std::uint8_t>(s.output_padding));
      if (s.kind == LayerKind::activation) continue;
      wr.le<std::uint32_t>(static_cast<std::uint32_t>(l.weight.size()));
      for (float v : l.weight.data()) wr.f32(v);
      wr.le<std::uint32_t>(static_cast<std::uint32_t>(l.bias.size()));
      for (float v : l.bias) wr.f32(v);
    }
  }
  wr.le<std::uint32_t>(static_cast<std::uint32_t>(w.prior.channels.size()));
  for (const auto& c : w.prior.channels) {
    wr.le<std::int32_t>(c.offset);
    wr.le<std::uint32_t>(static_cast<std::uint32_t>(c.cdf.size()));
    for (std::uint32_t v : c.cdf) wr.le<std::uint32_t>(v);
  }
  wr.le<std::uint32_t>(crc32_of(wr.out));
  return std::move(wr.out);
}

ModelWeights load_weights(std::span<const std::uint8_t> bytes) {
  Reader rd(bytes);
  rd.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw BadMagicError("not a weight file (bad magic)");
  rd.pos = 4;
  const auto version = rd.le<std::uint32_t>();
  if (version != kWeightFormatVersion) {
    throw VersionMismatchError("weight file version " + std::to_string(version) + ", expected " +
                               std::to_string(kWeightFormatVersion));
  }
  ModelWeights w;
  const auto variant = rd.le<std::uint8_t>();
  if (variant > 1) throw InconsistentShapeError("unknown model variant " + std::to_string(variant));
  w.variant = static_cast<Variant>(variant);
  w.latent_channels = rd.le<std::uint16_t>();
  w.hyper_channels = rd.le<std::uint16_t>();
  w.lambda_tag = rd.f32();
  w.negative_slope = rd.f32();
  const auto id_len = rd.le<std::uint16_t>();
  rd.need(id_len);
  w.model_id.assign(reinterpret_cast<const char*>(bytes.data() + rd.pos), id_len);
  rd.pos += id_len;

  const auto count = rd.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto t = rd.le<std::uint8_t>();
    if (t > 3) throw InconsistentShapeError("unknown transform id " + std::to_string(t));
    Layer l;
    const auto kind = rd.le<std::uint8_t>();
    if (kind > 2) throw InconsistentShapeError("unknown layer kind " + std::to_string(kind));
    l.spec.kind = static_cast<LayerKind>(kind);
    l.spec.in_channels = rd.le<std::uint16_t>();
    l.spec.out_channels = rd.le<std::uint16_t>();
    l.spec.kernel = rd.le<std::uint8_t>();
    l.spec.stride = rd.le<std::uint8_t>();
    l.spec.padding = rd.le<std::uint8_t>();
    l.spec.output_padding = rd.le<std::uint8_t>();
    if (l.spec.kind != LayerKind::activation) {
      const auto nw = rd.le<std::uint32_t>();
      rd.need(static_cast<std::size_t>(nw) * 4);
      const auto shape = weight_shape(l.spec);
      if (nw != shape_product(shape)) {
        throw InconsistentShapeError("layer " + std::to_string(i) + " stores " + std::to_string(nw) +
                                     " weights, its spec needs " + std::to_string(shape_product(shape)));
      }
      std::vector<float> data(nw);
      rd.floats(data);
      l.weight = Tensor(shape, std::move(data));
      const auto nb = rd.le<std::uint32_t>();
      rd.need(static_cast<std::size_t>(nb) * 4);
      l.bias.resize(nb);
      rd.floats(l.bias);
    }
    w.transforms[t].push_back(std::move(l));
  }

  const auto channels = rd.le<std::uint32_t>();
  rd.need(static_cast<std::size_t>(channels) * 8);
  w.prior.channels.resize(channels);
  for (auto& c : w.prior.channels) {
    c.offset = rd.le<std::int32_t>();
    const auto n = rd.le<std::uint32_t>();
    rd.need(static_cast<std::size_t>(n) * 4);
    c.cdf.resize(n);
    for (auto& v : c.cdf) v = rd.le<std::uint32_t>();
  }
  const std::size_t body = rd.pos;
  const auto stored_crc = rd.le<std::uint32_t>();
  if (rd.pos != bytes.size()) {
    throw FormatError(std::to_string(bytes.size() - rd.pos) + " trailing bytes after weight file");
  }
  if (crc32_of(bytes.first(body)) != stored_crc) throw ChecksumError("weight file CRC mismatch");
  w.validate();
  return w;
}

void save_weights_file(const ModelWeights& w, const std::filesystem::path& path) {
  const auto bytes = save_weights(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

ModelWeights load_weights_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open weight file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_weights(bytes);
}

std::uint64_t weights_hash(const ModelWeights& w) {
  const auto bytes = save_weights(w);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace fpc::model
