#include <doctest.h>
#include <omp.h>

#include <cmath>

#include "fixtures.hpp"
#include "fpc/codec.hpp"
#include "fpc/data.hpp"
#include "fpc/errors.hpp"
#include "fpc/model.hpp"

using namespace fpc;
using namespace fpc::codec;

namespace {

const LearnedCodec& seed0() {
  static const LearnedCodec c(model::make_seed_weights());
  return c;
}

std::size_t ceil_bytes(double bits) { return static_cast<std::size_t>(std::ceil(bits / 8.0)); }

}  // namespace

TEST_CASE("header and stream serialization round-trip") {
  Bitstream b;
  b.header.variant = StreamVariant::wavelet;
  b.header.model_hash = 0x0123456789abcdefull;
  b.header.height = 320;
  b.header.width = 448;
  b.header.latent_channels = 128;
  b.header.hyper_channels = 192;
  b.z_stream = {1, 2, 3};
  b.y_stream = {9, 8, 7, 6, 5};
  const auto bytes = serialize(b);
  CHECK(bytes.size() == b.total_bytes());
  CHECK(bytes.size() == kContainerBytes + 8);
  CHECK(parse_bitstream(bytes) == b);
  CHECK(b.bpp() == doctest::Approx(8.0 * double(bytes.size()) / (320.0 * 448.0)));
}

TEST_CASE("damaged containers are rejected") {
  const Image x = test::random_image(64, 64, 4);
  const auto bytes = serialize(seed0().encode(x).stream);

  auto magic = bytes;
  magic[1] = 'Q';
  CHECK_THROWS_AS(parse_bitstream(magic), BadMagicError);
  auto version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(parse_bitstream(version), VersionMismatchError);
  for (std::size_t cut : {std::size_t{1}, std::size_t{5}, bytes.size() - 10, bytes.size() - 1}) {
    const std::vector<std::uint8_t> shorter(bytes.begin(), bytes.begin() + std::ptrdiff_t(cut));
    CHECK_THROWS_AS(parse_bitstream(shorter), TruncatedError);
  }
  auto longer = bytes;
  longer.push_back(0);
  CHECK_THROWS_AS(parse_bitstream(longer), FormatError);

  // Every single-byte change past the magic and version is caught.
  std::size_t caught = 0;
  for (std::size_t i = 6; i < bytes.size(); ++i) {
    auto bad = bytes;
    bad[i] ^= 0x21;
    try {
      parse_bitstream(bad);
    } catch (const FormatError&) {
      ++caught;
    }
  }
  CHECK(caught == bytes.size() - 6);
}

TEST_CASE("constant-0 image codes to all-zero symbols at minimal length") {
  const Image x(64, 64, 0);
  const auto r = seed0().encode(x);
  REQUIRE(r.z_hat.shape == std::vector<std::size_t>{192, 1, 1});
  REQUIRE(r.y_hat.shape == std::vector<std::size_t>{128, 4, 4});
  for (auto v : r.z_hat.values) CHECK(v == 0);
  for (auto v : r.y_hat.values) CHECK(v == 0);
  CHECK(r.stream.z_stream.size() <= ceil_bytes(r.z_bits) + 2);
  CHECK(r.stream.y_stream.size() <= ceil_bytes(r.y_bits) + 2);
  CHECK(seed0().decode(r.stream) == r.reconstruction);
}

TEST_CASE("320x320 round trip and rate accounting") {
  const Image x = data::gen_synthetic_fingerprint(11, 320, 320);
  const auto r = seed0().encode(x);
  CHECK(r.stream.header.height == 320);
  CHECK(r.stream.header.width == 320);
  CHECK(r.stream.header.model_hash == seed0().hash());
  CHECK(r.z_hat.size() == 192 * 5 * 5);
  CHECK(r.y_hat.size() == 128 * 20 * 20);
  CHECK(seed0().decode(r.stream) == r.reconstruction);
  CHECK(decode(parse_bitstream(serialize(r.stream)), seed0().weights()) == r.reconstruction);

  CHECK(r.stream.z_stream.size() + 1 >= ceil_bytes(r.z_bits));
  CHECK(r.stream.z_stream.size() <= ceil_bytes(r.z_bits) + 32);
  CHECK(r.stream.y_stream.size() + 1 >= ceil_bytes(r.y_bits));
  CHECK(r.stream.y_stream.size() <= ceil_bytes(r.y_bits) + 32);
  const double estimate_bpp = (r.z_bits + r.y_bits) / (320.0 * 320.0);
  const double payload_bpp = 8.0 * double(r.stream.payload_bytes()) / (320.0 * 320.0);
  CHECK(payload_bpp >= estimate_bpp - 16.0 / (320.0 * 320.0));
  CHECK(payload_bpp <= estimate_bpp + 8.0 * 64.0 / (320.0 * 320.0));
}

TEST_CASE("encoding is independent of the thread count") {
  const Image x = data::gen_synthetic_fingerprint(12, 128, 192);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = seed0().encode(x);
  omp_set_num_threads(3);
  const auto b = seed0().encode(x);
  omp_set_num_threads(saved);
  CHECK(a.stream == b.stream);
  CHECK(a.reconstruction == b.reconstruction);
}

TEST_CASE("decoding with other weights is refused") {
  const Image x = test::random_image(64, 64, 13);
  const Bitstream b = seed0().encode(x).stream;
  model::SeedOptions o;
  o.seed = 1;
  const LearnedCodec other(model::make_seed_weights(o));
  CHECK_THROWS_AS(other.decode(b), ModelMismatchError);

  Bitstream wavelet = b;
  wavelet.header.variant = StreamVariant::wavelet;
  CHECK_THROWS_AS(seed0().decode(wavelet), FormatError);
}

TEST_CASE("images that are not multiples of 64 are rejected") {
  CHECK_THROWS_AS(seed0().encode(Image(320, 300, 10)), DimensionError);
  Bitstream b = seed0().encode(Image(64, 64, 10)).stream;
  b.header.width = 70;
  CHECK_THROWS(seed0().decode(b));
}

TEST_CASE("rd_loss composition") {
  const Image x = data::gen_synthetic_fingerprint(14, 128, 128);
  const auto& w = seed0().weights();
  const auto r = seed0().encode(x);
  const double mse = mse_unit(x, r.reconstruction);
  const double rate_y = r.y_bits / double(r.y_hat.size());
  const double rate_z = r.z_bits / double(r.z_hat.size());

  const RDLoss l = rd_loss(x, w, 0.013f);
  CHECK(l.distortion == doctest::Approx(mse).epsilon(1e-12));
  CHECK(l.rate_y == doctest::Approx(rate_y).epsilon(1e-12));
  CHECK(l.rate_z == doctest::Approx(rate_z).epsilon(1e-12));
  CHECK(l.distortion_scale == kDistortionScale);
  CHECK(l.total == doctest::Approx(double(0.013f) * 255.0 * 255.0 * mse + rate_y + rate_z).epsilon(1e-9));

  const RDLoss zero = rd_loss(x, w, 0.0f);
  CHECK(zero.total == doctest::Approx(zero.rate_y + zero.rate_z).epsilon(1e-12));
  const RDLoss perfect = compose_rd_loss(0.0932f, 0.0, 1.25, 0.5);
  CHECK(perfect.total == 1.75);
  CHECK_THROWS_AS(rd_loss(x, w, -0.1f), ConfigError);
}

TEST_CASE("64x64 constant image reconstruction") {
  const Image x(64, 64, 128);
  model::SeedOptions o;
  for (float bias : {0.0f, 0.1f}) {
    o.bias = bias;
    const LearnedCodec c(model::make_seed_weights(o));
    const auto r = c.encode(x);
    int lo = 255, hi = 0;
    for (std::size_t y = 16; y < 48; ++y) {
      for (std::size_t i = 16; i < 48; ++i) {
        lo = std::min<int>(lo, r.reconstruction.at(y, i));
        hi = std::max<int>(hi, r.reconstruction.at(y, i));
      }
    }
    MESSAGE("seed-0 bias " << bias << ", constant-128 64x64: interior reconstruction range [" << lo << ", "
                           << hi << "], max deviation " << hi - lo);
    CHECK(c.encode(x).reconstruction == r.reconstruction);
    CHECK(c.decode(r.stream) == r.reconstruction);
  }
}
