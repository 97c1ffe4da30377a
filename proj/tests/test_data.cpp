#include <doctest.h>
#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "fpc/data.hpp"
#include "fpc/errors.hpp"

using namespace fpc;
using namespace fpc::data;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fpc_data_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Plain libpng writer for an RGB image.
void write_rgb_png(const fs::path& p, std::size_t h, std::size_t w, const std::vector<std::uint8_t>& rgb) {
  FILE* f = std::fopen(p.c_str(), "wb");
  REQUIRE(f);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < h; ++y) png_write_row(png, rgb.data() + y * w * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

void touch(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << "x";
}

}  // namespace

TEST_CASE("PGM and PNG round-trip") {
  TempDir dir;
  const Image x = test::random_image(37, 53, 1);
  for (const char* name : {"a.pgm", "a.png"}) {
    save_gray(x, dir.path / name);
    LoadInfo info;
    CHECK(load_gray(dir.path / name, &info) == x);
    CHECK_FALSE(info.converted_from_color);
  }
  CHECK_THROWS_AS(load_gray(dir.path / "missing.png"), ImageIoError);
  std::ofstream(dir.path / "junk.png") << "not an image";
  CHECK_THROWS_AS(load_gray(dir.path / "junk.png"), ImageIoError);
}

TEST_CASE("color PNGs are converted to luma") {
  TempDir dir;
  std::vector<std::uint8_t> rgb = {255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 10, 10};
  write_rgb_png(dir.path / "c.png", 2, 2, rgb);
  LoadInfo info;
  const Image g = load_gray(dir.path / "c.png", &info);
  CHECK(info.converted_from_color);
  CHECK(g.at(0, 0) == 76);
  CHECK(g.at(0, 1) == 150);
  CHECK(g.at(1, 0) == 29);
  CHECK(g.at(1, 1) == 10);
  CHECK(bt601_luma(255, 255, 255) == 255);
  CHECK(bt601_luma(0, 0, 0) == 0);
}

TEST_CASE("center crop") {
  const auto off = center_crop_offsets(328, 356, 320);
  CHECK(off.top == 4);
  CHECK(off.left == 18);
  Image x(328, 356);
  for (std::size_t y = 0; y < 328; ++y)
    for (std::size_t i = 0; i < 356; ++i) x.at(y, i) = std::uint8_t((y * 3 + i) % 251);
  const Image c = center_crop(x);
  CHECK(c.height() == 320);
  CHECK(c.at(0, 0) == x.at(4, 18));
  CHECK(c.at(319, 319) == x.at(323, 337));
  const Image same = test::random_image(320, 320, 2);
  CHECK(center_crop(same) == same);
  CHECK_THROWS_AS(center_crop(Image(319, 400)), DimensionError);
}

TEST_CASE("subject-disjoint split") {
  const auto make = [](int subjects) {
    CorpusIndex idx;
    for (int s = subjects; s >= 1; --s)
      for (int f = 1; f <= 2; ++f) idx.entries.push_back({s, f, 1, {}, 0, Split::train});
    return split(idx);
  };
  const CorpusIndex big = make(500);
  CHECK(big.in_split(Split::train).size() == 600);
  CHECK(big.in_split(Split::val).size() == 200);
  CHECK(big.in_split(Split::test).size() == 200);
  for (const auto& e : big.entries) {
    if (e.subject_id == 300) CHECK(e.split == Split::train);
    if (e.subject_id == 301) CHECK(e.split == Split::val);
    if (e.subject_id == 401) CHECK(e.split == Split::test);
  }
  const CorpusIndex small = make(10);
  CHECK(small.in_split(Split::train).size() == 12);
  CHECK(small.in_split(Split::val).size() == 4);
  CHECK(small.in_split(Split::test).size() == 4);
  CHECK(parse_split("val") == Split::val);
  CHECK_FALSE(parse_split("dev").has_value());
}

TEST_CASE("synthetic fingerprints are deterministic") {
  const Image a = gen_synthetic_fingerprint(5, 320, 320);
  CHECK(a == gen_synthetic_fingerprint(5, 320, 320));
  CHECK_FALSE(a == gen_synthetic_fingerprint(6, 320, 320));
  std::size_t dark = 0;
  for (auto v : a.pixels()) dark += v < 100;
  CHECK(dark > a.size() / 10);
  CHECK_THROWS_AS(gen_synthetic_fingerprint(1, 64, 320), DimensionError);
}

TEST_CASE("synthetic manifest") {
  const Manifest m = parse_manifest(R"({"synthetic": {"subjects": 5, "fingers": 2, "seed": 3}, "split": "train"})");
  REQUIRE(m.synthetic);
  CHECK(m.split == Split::train);
  const CorpusIndex idx = scan(m);
  CHECK(idx.entries.size() == 10);
  CHECK(idx.in_split(Split::train).size() == 6);
  CHECK(idx.entries[1].image_id() == "s0001_f02_n01");
  const Image img = load_entry(idx.entries[0], m);
  CHECK(img.height() == 320);
  CHECK(img == load_entry(scan(m).entries[0], m));

  CHECK_THROWS_AS(parse_manifest("{"), ConfigError);
  CHECK_THROWS_AS(parse_manifest(R"({"crop": 320})"), ConfigError);
  CHECK_THROWS_AS(parse_manifest(R"({"synthetic": {}, "crop": 100})"), ConfigError);
  CHECK_THROWS_AS(parse_manifest(R"({"synthetic": {"subjects": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_manifest(R"({"synthetic": {}, "split": "dev"})"), ConfigError);
}

TEST_CASE("directory manifest scanning") {
  TempDir dir;
  for (int s : {1, 2, 3, 4, 5})
    for (int f : {1, 2}) {
      char rel[64];
      std::snprintf(rel, sizeof rel, "%03d/L/%03d_L%d_0.png", s, s, f);
      touch(dir.path / "corpus" / rel);
    }
  touch(dir.path / "corpus" / "001" / "notes.txt");
  touch(dir.path / "corpus" / "002" / "L" / "003_L1_0.png");
  std::ofstream(dir.path / "m.json") << R"({"root": "corpus", "pattern": "{subject}/L/{subject}_L{finger}_{any}.png", "subjects": 4})";
  const Manifest m = load_manifest(dir.path / "m.json");
  CHECK(m.root == dir.path / "corpus");
  const CorpusIndex idx = scan(m);
  CHECK(idx.entries.size() == 8);
  for (const auto& e : idx.entries) {
    CHECK(e.subject_id <= 4);
    CHECK((e.finger_id == 1 || e.finger_id == 2));
  }
  CHECK(idx.in_split(Split::train).size() == 4);
  CHECK(idx.in_split(Split::val).empty());
  CHECK(idx.in_split(Split::test).size() == 4);
  CHECK_THROWS_AS(scan(parse_manifest(R"({"root": "/nonexistent/x", "pattern": "{subject}.png"})")), ConfigError);
  CHECK_THROWS_AS(scan(parse_manifest(R"({"root": ".", "pattern": "{finger}.png"})")), ConfigError);
}
