#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "fpc/codec.hpp"
#include "fpc/data.hpp"
#include "fpc/model.hpp"

using namespace fpc;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("fpc_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }

  // Runs the binary inside the workspace; returns its exit status.
  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir.string() + "' && '" FPC_BINARY "' " + args + " > out.txt 2> err.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const fs::path& rel) const {
    std::ifstream in(dir / rel);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

using Row = std::map<std::string, std::string>;

std::vector<Row> read_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<Row> rows;
  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (std::getline(in, line)) header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    REQUIRE(cells.size() == header.size());
    Row r;
    for (std::size_t i = 0; i < cells.size(); ++i) r[header[i]] = cells[i];
    rows.push_back(r);
  }
  return rows;
}

// One-subject corpus; every image lands in the test split.
void single_image_corpus(const Workspace& ws, const Image& x) {
  fs::create_directories(ws.dir / "corpus");
  data::save_gray(x, ws.dir / "corpus" / "s0001_f01_n01.png");
  std::ofstream(ws.dir / "corpus" / "manifest.json")
      << R"({"root": ".", "pattern": "s{subject}_f{finger}_n{sample}.png", "crop": 320, "split": "test"})";
}

}  // namespace

TEST_CASE("configuration errors exit with status 2") {
  Workspace ws;
  data::save_gray(test::random_image(64, 64, 1), ws.dir / "a.png");
  CHECK(ws.run("encode --weights missing.fpmw --out enc a.png") == 2);
  CHECK(ws.read("err.txt").find("missing.fpmw") != std::string::npos);
  CHECK(ws.run("encode --out enc a.png") == 2);
  CHECK(ws.run("bench-rd --manifest nothing.json --codec wavelet --out rd") == 2);
  CHECK(ws.run("bench-rd --codec bogus --out rd") == 2);
  CHECK(ws.run("no-such-command") == 2);
  CHECK(ws.run("--help") == 0);
}

TEST_CASE("encode and decode round-trip through files") {
  Workspace ws;
  const Image x = data::gen_synthetic_fingerprint(3, 128, 192);
  data::save_gray(x, ws.dir / "img.png");
  REQUIRE(ws.run("init-weights --out w.fpmw") == 0);
  REQUIRE(ws.run("encode --weights w.fpmw --out enc img.png") == 0);
  REQUIRE(fs::exists(ws.dir / "enc" / "img.fpbs"));
  const std::string log = ws.read("out.txt");
  const auto bytes_at = log.find("bytes="), bpp_at = log.find("bpp=");
  REQUIRE(bytes_at != std::string::npos);
  REQUIRE(bpp_at != std::string::npos);
  const double logged_bytes = std::stod(log.substr(bytes_at + 6)), logged_bpp = std::stod(log.substr(bpp_at + 4));
  CHECK(logged_bytes == double(fs::file_size(ws.dir / "enc" / "img.fpbs")));
  CHECK(logged_bpp == doctest::Approx(8.0 * logged_bytes / (128.0 * 192.0)).epsilon(1e-6));
  REQUIRE(ws.run("decode --weights w.fpmw --out dec enc/img.fpbs") == 0);

  const codec::LearnedCodec c(model::make_seed_weights());
  const auto r = c.encode(x);
  CHECK(data::load_gray(ws.dir / "dec" / "img.png") == r.reconstruction);
  CHECK(fs::file_size(ws.dir / "enc" / "img.fpbs") == r.stream.total_bytes());
  std::ifstream in(ws.dir / "enc" / "img.fpbs", std::ios::binary);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
  CHECK(codec::parse_bitstream(bytes) == r.stream);

  std::ofstream(ws.dir / "broken.png") << "not an image";
  CHECK(ws.run("encode --weights w.fpmw --out enc3 img.png broken.png") == 1);
  CHECK(fs::exists(ws.dir / "enc3" / "img.fpbs"));

  model::SeedOptions o;
  o.seed = 4;
  model::save_weights_file(model::make_seed_weights(o), ws.dir / "other.fpmw");
  CHECK(ws.run("decode --weights other.fpmw --out dec2 enc/img.fpbs") != 0);
}

TEST_CASE("bench-rd writes monotone wavelet curves") {
  Workspace ws;
  REQUIRE(ws.run("gen-synthetic --out syn --count 5 --size 320 --seed 2") == 0);
  REQUIRE(ws.run("bench-rd --manifest syn/manifest.json --codec wavelet --out rd") == 0);
  const auto rows = read_csv(ws.read("rd/rd_curves.csv"));
  REQUIRE(rows.size() == 5);
  double last_bpp = 0.0, last_psnr = 0.0;
  for (const auto& r : rows) {
    CHECK(r.at("codec") == "wavelet");
    CHECK(r.at("failed") == "0");
    const double bpp = std::stod(r.at("mean_bpp")), p = std::stod(r.at("mean_psnr"));
    CHECK(bpp > last_bpp);
    CHECK(p > last_psnr);
    CHECK(bpp == doctest::Approx(8.0 / std::stod(r.at("quality"))).epsilon(0.05));
    last_bpp = bpp;
    last_psnr = p;
  }
  const auto summary = nlohmann::json::parse(ws.read("rd/bd_summary.json"));
  CHECK(summary["anchor"] == "wavelet");
  REQUIRE(summary["comparisons"].size() == 1);
  CHECK(summary["comparisons"][0]["bd_rate_psnr_percent"].get<double>() == doctest::Approx(0.0));
  CHECK(summary["comparisons"][0]["bd_psnr"].get<double>() == doctest::Approx(0.0));
  CHECK(read_csv(ws.read("rd/rd_points.csv")).size() == 5);

  REQUIRE(ws.run("bench-rd --manifest syn/manifest.json --codec wavelet --threads 3 --out rd3") == 0);
  CHECK(ws.read("rd3/rd_curves.csv") == ws.read("rd/rd_curves.csv"));
  CHECK(ws.read("rd3/rd_points.csv") == ws.read("rd/rd_points.csv"));

  REQUIRE(ws.run("minutiae --manifest syn/manifest.json --codec wavelet --qualities 40 10 --out mn") == 0);
  const auto mrows = read_csv(ws.read("mn/minutiae.csv"));
  REQUIRE(mrows.size() == 2);
  for (const auto& m : mrows) {
    const auto hit = std::find_if(rows.begin(), rows.end(), [&](const Row& r) {
      return r.at("codec") == m.at("codec") && r.at("quality") == m.at("quality");
    });
    CHECK(hit != rows.end());
  }
}

TEST_CASE("external CSV results pass through unchanged") {
  Workspace ws;
  REQUIRE(ws.run("gen-synthetic --out syn --count 5 --size 320") == 0);
  std::ofstream(ws.dir / "ext.csv") << "image_id,codec,bytes,psnr,ssim\n"
                                       "s0005_f01_n01,jpeg2000@40,2560,25.0,0.90\n"
                                       "s0005_f01_n01,jpeg2000@20,5120,30.0,0.95\n"
                                       "s0005_f01_n01,jpeg2000@10,10240,35.0,0.98\n"
                                       "s0005_f01_n01,jpeg2000@5,20480,40.0,0.99\n";
  REQUIRE(ws.run("bench-rd --manifest syn/manifest.json --codec wavelet external-csv --external-csv ext.csv "
                 "--out rd") == 0);
  const auto rows = read_csv(ws.read("rd/rd_curves.csv"));
  std::vector<Row> ext;
  for (const auto& r : rows)
    if (r.at("codec") == "jpeg2000") ext.push_back(r);
  REQUIRE(ext.size() == 4);
  CHECK(ext[0].at("quality") == "40");
  CHECK(std::stod(ext[0].at("mean_bpp")) == doctest::Approx(0.2));
  CHECK(std::stod(ext[0].at("mean_psnr")) == doctest::Approx(25.0));
  CHECK(std::stod(ext[3].at("mean_ssim")) == doctest::Approx(0.99));
  const auto summary = nlohmann::json::parse(ws.read("rd/bd_summary.json"));
  CHECK(summary["comparisons"].size() == 2);

  std::ofstream(ws.dir / "bad.csv") << "image_id,codec,psnr\nx,y,1\n";
  CHECK(ws.run("bench-rd --manifest syn/manifest.json --codec external-csv --external-csv bad.csv --out rd2") == 2);
}

TEST_CASE("minutiae report for identical images keeps everything") {
  Workspace ws;
  REQUIRE(ws.run("gen-synthetic --out syn --count 5 --size 320 --seed 7") == 0);
  REQUIRE(ws.run("minutiae --manifest syn/manifest.json --codec identity --out mn") == 0);
  const auto rows = read_csv(ws.read("mn/minutiae.csv"));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].at("status") == "ok");
  CHECK(rows[0].at("kept_t") == rows[0].at("original_t"));
  CHECK(rows[0].at("kept_b") == rows[0].at("original_b"));
  const auto summary = nlohmann::json::parse(ws.read("mn/minutiae_summary.json"));
  REQUIRE(summary.size() == 1);
  CHECK(summary[0]["kept_fraction"].get<double>() == 1.0);
}

TEST_CASE("minutiae report over supplied reconstructions") {
  Workspace ws;
  single_image_corpus(ws, test::severed_original());
  fs::create_directories(ws.dir / "recon");
  data::save_gray(test::severed_compressed(), ws.dir / "recon" / "s0001_f01_n01.png");
  REQUIRE(ws.run("minutiae --manifest corpus/manifest.json --codec reconstructions --reconstructions recon "
                 "--out mn") == 0);
  const std::string first = ws.read("mn/minutiae.csv");
  const auto rows = read_csv(first);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].at("image_id") == "s0001_f01_n01");
  CHECK(rows[0].at("extra_t") == "2");
  CHECK(rows[0].at("extra_b") == "0");
  CHECK(rows[0].at("lost_t") == "0");
  REQUIRE(ws.run("minutiae --manifest corpus/manifest.json --codec reconstructions --reconstructions recon "
                 "--out mn2") == 0);
  CHECK(ws.read("mn2/minutiae.csv") == first);
}
