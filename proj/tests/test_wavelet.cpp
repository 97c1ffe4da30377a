#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "fpc/data.hpp"
#include "fpc/errors.hpp"
#include "fpc/quality.hpp"
#include "fpc/wavelet.hpp"

using namespace fpc;
using namespace fpc::wavelet;

namespace {

std::vector<double> random_plane(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 255.0);
  std::vector<double> p(n);
  for (auto& v : p) v = d(rng);
  return p;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("constant image has empty detail subbands") {
  for (Filter f : {Filter::cdf97, Filter::haar}) {
    const Pyramid p = dwt_forward(Image(64, 64, 77), 4, f);
    for (const Subband& s : p.subbands()) {
      for (std::size_t y = s.top; y < s.top + s.height; ++y) {
        for (std::size_t x = s.left; x < s.left + s.width; ++x) {
          if (s.orientation == Orientation::ll) {
            CHECK(p.at(y, x) == doctest::Approx(77.0).epsilon(1e-9));
          } else {
            CHECK(std::abs(p.at(y, x)) <= 1e-6);
          }
        }
      }
    }
  }
}

TEST_CASE("subband layout") {
  const Pyramid p = dwt_forward(Image(64, 32, 1), 3);
  const auto bands = p.subbands();
  REQUIRE(bands.size() == 10);
  CHECK(bands[0].orientation == Orientation::ll);
  CHECK(bands[0].level == 3);
  CHECK(bands[0].height == 8);
  CHECK(bands[0].width == 4);
  CHECK(bands.back().level == 1);
  CHECK(bands.back().orientation == Orientation::hh);
  CHECK(bands.back().top == 32);
  CHECK(bands.back().left == 16);
  std::size_t area = 0;
  for (const auto& b : bands) area += b.height * b.width;
  CHECK(area == 64 * 32);
}

TEST_CASE("perfect reconstruction on random planes") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t h = 64, w = seed % 2 ? 64 : 96;
    const auto plane = random_plane(h * w, seed);
    const Pyramid p = dwt_forward(plane, h, w, 1 + int(seed % 4), seed % 5 == 4 ? Filter::haar : Filter::cdf97);
    worst = std::max(worst, max_diff(plane, dwt_inverse(p)));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("one-dimensional lifting inverts") {
  std::vector<double> x = random_plane(18, 3);
  const auto orig = x;
  lift_forward(x, Filter::cdf97);
  lift_inverse(x, Filter::cdf97);
  CHECK(max_diff(x, orig) <= 1e-9);
  std::vector<double> odd(7);
  CHECK_THROWS_AS(lift_forward(odd, Filter::cdf97), DimensionError);
}

TEST_CASE("single-level Haar matches direct averages and differences") {
  const std::size_t h = 16, w = 12;
  const auto plane = random_plane(h * w, 9);
  const Pyramid p = dwt_forward(plane, h, w, 1, Filter::haar);
  const auto px = [&](std::size_t y, std::size_t x) { return plane[y * w + x]; };
  for (std::size_t i = 0; i < h / 2; ++i) {
    for (std::size_t j = 0; j < w / 2; ++j) {
      const double a = px(2 * i, 2 * j), b = px(2 * i, 2 * j + 1);
      const double c = px(2 * i + 1, 2 * j), d = px(2 * i + 1, 2 * j + 1);
      CHECK(p.at(i, j) == doctest::Approx((a + b + c + d) / 4.0).epsilon(1e-12));
      // Horizontal difference of the row averages, vertical difference of the column averages.
      CHECK(p.at(i, w / 2 + j) == doctest::Approx(((a - b) + (c - d)) / 2.0).epsilon(1e-12));
      CHECK(p.at(h / 2 + i, j) == doctest::Approx(((a + b) - (c + d)) / 2.0).epsilon(1e-12));
      CHECK(p.at(h / 2 + i, w / 2 + j) == doctest::Approx((a - b) - (c - d)).epsilon(1e-12));
    }
  }
}

TEST_CASE("dead-zone quantizer error stays within one step") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> d(-500.0, 500.0);
  for (double step : {0.1, 1.0, 7.5, 40.0}) {
    for (int i = 0; i < 2000; ++i) {
      const double c = d(rng);
      const auto q = deadzone_quantize(c, step);
      CHECK(std::abs(c - deadzone_dequantize(q, step)) <= step);
      CHECK(q == (c < 0 ? -1 : 1) * std::int32_t(std::floor(std::abs(c) / step)));
    }
  }
  CHECK(deadzone_quantize(0.99, 1.0) == 0);
  CHECK(deadzone_quantize(-0.99, 1.0) == 0);
  CHECK(deadzone_dequantize(0, 3.0) == 0.0);
  CHECK(deadzone_dequantize(2, 1.0) == 2.5);
  CHECK(deadzone_dequantize(-1, 2.0) == -3.0);
}

TEST_CASE("target compression ratio is met within 5%") {
  const Image x = data::gen_synthetic_fingerprint(21, 320, 320);
  for (double ratio : {10.0, 40.0}) {
    WaveletConfig cfg;
    cfg.target_ratio = ratio;
    const BaselineResult r = encode_baseline(x, cfg);
    const double bytes = double(serialize(r.stream).size());
    CHECK(bytes >= 0.95 * 320.0 * 320.0 / ratio);
    CHECK(bytes <= 1.05 * 320.0 * 320.0 / ratio);
    CHECK(r.ratio == doctest::Approx(compression_ratio(x, r.stream)));
    const Image back = decode_baseline(codec::parse_bitstream(codec::serialize(r.stream)));
    CHECK(back.height() == 320);
  }
}

TEST_CASE("a tiny step is near-lossless") {
  const Image x = data::gen_synthetic_fingerprint(22, 128, 128);
  WaveletConfig cfg;
  cfg.quant_step = 0.05;
  const BaselineResult r = encode_baseline(x, cfg);
  const Image back = decode_baseline(codec::parse_bitstream(codec::serialize(r.stream)));
  CHECK(quality::psnr(x, back) > 60.0);
}

TEST_CASE("PSNR falls as the compression ratio rises") {
  for (std::uint64_t seed : {31, 32, 33}) {
    const Image x = data::gen_synthetic_fingerprint(seed, 320, 320);
    double last = quality::kInfinitePsnr;
    for (double ratio : {5.0, 10.0, 20.0, 30.0, 40.0}) {
      WaveletConfig cfg;
      cfg.target_ratio = ratio;
      const Image back = decode_baseline(encode_baseline(x, cfg).stream);
      const double p = quality::psnr(x, back);
      CHECK(p < last);
      last = p;
    }
  }
}

TEST_CASE("bad configurations") {
  const Image small(16, 16, 100);
  WaveletConfig cfg;
  cfg.target_ratio = 1000.0;
  CHECK_THROWS_AS(encode_baseline(small, cfg), ConfigError);
  cfg = {};
  cfg.levels = 0;
  CHECK_THROWS_AS(encode_baseline(small, cfg), ConfigError);
  cfg = {};
  cfg.quant_step = -1.0;
  CHECK_THROWS_AS(encode_baseline(small, cfg), ConfigError);
  cfg = {};
  CHECK_THROWS_AS(encode_baseline(Image(20, 20, 1), cfg), DimensionError);
}

TEST_CASE("wavelet streams are self-describing") {
  const Image x = data::gen_synthetic_fingerprint(23, 128, 128);
  WaveletConfig cfg;
  cfg.levels = 3;
  cfg.filter = Filter::haar;
  cfg.quant_step = 4.0;
  const BaselineResult r = encode_baseline(x, cfg);
  CHECK(r.stream.header.variant == codec::StreamVariant::wavelet);
  const Image a = decode_baseline(r.stream);
  const Image b = decode_baseline(codec::parse_bitstream(codec::serialize(r.stream)));
  CHECK(a == b);
  CHECK(quality::psnr(x, a) > 25.0);
  codec::Bitstream learned = r.stream;
  learned.header.variant = codec::StreamVariant::learned;
  CHECK_THROWS_AS(decode_baseline(learned), FormatError);
}

TEST_CASE("external CSV ingestion") {
  const auto rows = parse_external_csv(
      "image_id,codec,bytes,psnr,ssim\n"
      "s0001_f01_n01,jpeg2000@40,2560,31.5,0.91\n"
      "s0001_f01_n01,kakadu,5120,35.25,0.95\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].image_id == "s0001_f01_n01");
  CHECK(rows[0].codec == "jpeg2000");
  CHECK(rows[0].quality == "40");
  CHECK(rows[0].bytes == 2560.0);
  CHECK(rows[0].psnr == 31.5);
  CHECK(rows[0].ssim == 0.91);
  CHECK(rows[1].codec == "kakadu");
  CHECK(rows[1].quality.empty());

  const auto reordered = parse_external_csv("ssim,psnr,bytes,codec,image_id\n0.5,20,100,x@1,a\n");
  REQUIRE(reordered.size() == 1);
  CHECK(reordered[0].image_id == "a");
  CHECK(reordered[0].bytes == 100.0);

  CHECK_THROWS_AS(parse_external_csv("image_id,codec,psnr,ssim\na,b,1,2\n"), ConfigError);
  CHECK_THROWS_AS(parse_external_csv("image_id,codec,bytes,psnr,ssim\na,b,zero,1,2\n"), ConfigError);
  CHECK_THROWS_AS(parse_external_csv("image_id,codec,bytes,psnr,ssim\na,b,1,2\n"), ConfigError);
}
