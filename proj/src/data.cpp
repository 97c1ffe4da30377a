#include "fpc/data.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fpc/errors.hpp"

namespace fpc::data {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

// Skips whitespace and '#' comments between PGM header tokens.
bool next_pgm_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) break;
  }
  if (c == EOF) return false;
  tok.push_back(static_cast<char>(c));
  while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#') tok.push_back(static_cast<char>(in.get()));
  return true;
}

Image read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  std::string magic, w, h, maxval;
  if (!next_pgm_token(in, magic) || magic != "P5") {
    throw ImageIoError(path.string() + ": only binary PGM (P5) is supported");
  }
  if (!next_pgm_token(in, w) || !next_pgm_token(in, h) || !next_pgm_token(in, maxval)) {
    throw ImageIoError(path.string() + ": truncated PGM header");
  }
  const long width = std::stol(w), height = std::stol(h), mv = std::stol(maxval);
  if (width <= 0 || height <= 0) throw ImageIoError(path.string() + ": bad PGM extents");
  if (mv <= 0 || mv > 255) throw ImageIoError(path.string() + ": only 8-bit PGM is supported");
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width * height));
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size())) {
    throw ImageIoError(path.string() + ": truncated PGM payload");
  }
  return Image(static_cast<std::size_t>(height), static_cast<std::size_t>(width), std::move(px));
}

void write_pgm(const Image& image, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels().data()),
            static_cast<std::streamsize>(image.size()));
  if (!out) throw ImageIoError("write failed: " + path.string());
}

Image read_png(const fs::path& path, LoadInfo* info) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw ImageIoError(path.string() + ": " + img.message);
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw ImageIoError(path.string() + ": " + msg);
  }
  const std::size_t h = img.height, w = img.width;
  if (!color) return Image(h, w, std::move(buf));
  if (info) info->converted_from_color = true;
  std::vector<std::uint8_t> gray(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    gray[i] = bt601_luma(buf[i * channels], buf[i * channels + 1], buf[i * channels + 2]);
  }
  return Image(h, w, std::move(gray));
}

void write_png(const Image& image, const fs::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, image.pixels().data(), 0,
                               nullptr)) {
    throw ImageIoError("cannot write " + path.string() + ": " + img.message);
  }
}

// splitmix64: portable, seedable, and identical on every platform.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

std::uint64_t mix_seed(std::uint64_t seed, int a, int b, int c) {
  SplitMix m(seed ^ (static_cast<std::uint64_t>(a) << 40) ^ (static_cast<std::uint64_t>(b) << 20) ^
             static_cast<std::uint64_t>(c));
  return m.next();
}

}  // namespace

std::uint8_t bt601_luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

Image load_gray(const fs::path& path, LoadInfo* info) {
  if (info) *info = {};
  const std::string ext = lower_ext(path);
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") return read_png(path, info);
  throw ImageIoError(path.string() + ": unsupported image format '" + ext + "'");
}

void save_gray(const Image& image, const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".pgm") return write_pgm(image, path);
  if (ext == ".png") return write_png(image, path);
  throw ImageIoError(path.string() + ": unsupported image format '" + ext + "'");
}

CropOffsets center_crop_offsets(std::size_t height, std::size_t width, std::size_t side) {
  if (height < side || width < side) {
    throw DimensionError("cannot crop " + std::to_string(height) + "x" + std::to_string(width) +
                         " to " + std::to_string(side) + "x" + std::to_string(side));
  }
  return {(height - side) / 2, (width - side) / 2};
}

Image center_crop(const Image& image, std::size_t side) {
  const CropOffsets off = center_crop_offsets(image.height(), image.width(), side);
  Image out(side, side);
  for (std::size_t y = 0; y < side; ++y) {
    const auto* src = image.pixels().data() + (y + off.top) * image.width() + off.left;
    std::copy(src, src + side, out.pixels().data() + y * side);
  }
  return out;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  return std::nullopt;
}

std::string CorpusEntry::image_id() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "s%04d_f%02d_n%02d", subject_id, finger_id, sample_id);
  return buf;
}

std::vector<CorpusEntry> CorpusIndex::in_split(Split s) const {
  std::vector<CorpusEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

CorpusIndex split(CorpusIndex index) {
  std::set<int> subjects;
  for (const auto& e : index.entries) subjects.insert(e.subject_id);
  const std::size_t n = subjects.size();
  const std::size_t n_train = n * 60 / 100;
  const std::size_t n_val = n * 20 / 100;
  std::map<int, Split> assign;
  std::size_t rank = 0;
  for (int s : subjects) {
    assign[s] = rank < n_train ? Split::train : rank < n_train + n_val ? Split::val : Split::test;
    ++rank;
  }
  for (auto& e : index.entries) e.split = assign[e.subject_id];
  std::sort(index.entries.begin(), index.entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.subject_id, a.finger_id, a.sample_id) <
           std::tie(b.subject_id, b.finger_id, b.sample_id);
  });
  return index;
}

Manifest parse_manifest(const std::string& json_text, const fs::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  Manifest m;
  try {
    if (j.contains("synthetic")) {
      const auto& s = j["synthetic"];
      SyntheticCorpus sc;
      sc.subjects = s.value("subjects", sc.subjects);
      sc.fingers = s.value("fingers", sc.fingers);
      sc.samples = s.value("samples", sc.samples);
      sc.seed = s.value("seed", sc.seed);
      sc.height = s.value("height", sc.height);
      sc.width = s.value("width", sc.width);
      if (sc.subjects <= 0 || sc.fingers <= 0 || sc.samples <= 0) {
        throw ConfigError("synthetic corpus counts must be positive");
      }
      m.synthetic = sc;
    } else {
      if (!j.contains("root") || !j.contains("pattern")) {
        throw ConfigError("manifest needs either 'synthetic' or both 'root' and 'pattern'");
      }
      m.root = j["root"].get<std::string>();
      if (m.root.is_relative() && !base_dir.empty()) m.root = base_dir / m.root;
      m.pattern = j["pattern"].get<std::string>();
    }
    if (j.contains("subjects")) m.subjects = j["subjects"].get<int>();
    m.crop = j.value("crop", m.crop);
    if (j.contains("split")) {
      auto s = parse_split(j["split"].get<std::string>());
      if (!s) throw ConfigError("manifest split must be train, val or test");
      m.split = *s;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest field has the wrong type: ") + e.what());
  }
  if (m.crop == 0 || m.crop % 64 != 0) throw ConfigError("crop side must be a positive multiple of 64");
  return m;
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

namespace {

// Turns "{subject}/{subject}_{finger}_{sample}.png" into a regex. Repeated
// placeholders must capture the same number.
struct PatternMatcher {
  std::regex re;
  std::vector<std::string> groups;

  explicit PatternMatcher(const std::string& pattern) {
    static const std::string special = R"(\^$.|?*+()[]{})";
    std::string rx;
    for (std::size_t i = 0; i < pattern.size();) {
      if (pattern[i] == '{') {
        const auto end = pattern.find('}', i);
        if (end == std::string::npos) throw ConfigError("unterminated placeholder in pattern");
        const std::string name = pattern.substr(i + 1, end - i - 1);
        if (name == "any") {
          rx += "[^/]*";
        } else if (name == "subject" || name == "finger" || name == "sample") {
          rx += "(\\d+)";
          groups.push_back(name);
        } else {
          throw ConfigError("unknown pattern placeholder {" + name + "}");
        }
        i = end + 1;
        continue;
      }
      if (special.find(pattern[i]) != std::string::npos) rx += '\\';
      rx += pattern[i++];
    }
    if (std::find(groups.begin(), groups.end(), "subject") == groups.end()) {
      throw ConfigError("pattern must contain {subject}");
    }
    re = std::regex(rx, std::regex::ECMAScript | std::regex::icase);
  }

  std::optional<CorpusEntry> match(const std::string& rel) const {
    std::smatch m;
    if (!std::regex_match(rel, m, re)) return std::nullopt;
    std::map<std::string, int> values;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const int v = std::stoi(m[g + 1].str());
      auto [it, inserted] = values.emplace(groups[g], v);
      if (!inserted && it->second != v) return std::nullopt;
    }
    CorpusEntry e;
    e.subject_id = values["subject"];
    e.finger_id = values.count("finger") ? values["finger"] : 0;
    e.sample_id = values.count("sample") ? values["sample"] : 0;
    return e;
  }
};

}  // namespace

CorpusIndex scan(const Manifest& manifest) {
  CorpusIndex index;
  if (manifest.synthetic) {
    const auto& s = *manifest.synthetic;
    for (int subj = 1; subj <= s.subjects; ++subj)
      for (int f = 1; f <= s.fingers; ++f)
        for (int n = 1; n <= s.samples; ++n) {
          CorpusEntry e;
          e.subject_id = subj;
          e.finger_id = f;
          e.sample_id = n;
          e.synthetic_seed = mix_seed(s.seed, subj, f, n);
          index.entries.push_back(e);
        }
  } else {
    if (!fs::is_directory(manifest.root)) {
      throw ConfigError("corpus root is not a directory: " + manifest.root.string());
    }
    PatternMatcher matcher(manifest.pattern);
    for (const auto& de : fs::recursive_directory_iterator(manifest.root)) {
      if (!de.is_regular_file()) continue;
      const std::string rel = fs::relative(de.path(), manifest.root).generic_string();
      if (auto e = matcher.match(rel)) {
        e->path = de.path();
        index.entries.push_back(*e);
      }
    }
  }
  if (manifest.subjects) {
    std::set<int> ids;
    for (const auto& e : index.entries) ids.insert(e.subject_id);
    std::set<int> keep;
    for (int id : ids) {
      if (static_cast<int>(keep.size()) >= *manifest.subjects) break;
      keep.insert(id);
    }
    std::erase_if(index.entries, [&](const CorpusEntry& e) { return !keep.count(e.subject_id); });
  }
  return split(std::move(index));
}

Image load_entry(const CorpusEntry& entry, const Manifest& manifest) {
  if (manifest.synthetic) {
    Image img = gen_synthetic_fingerprint(entry.synthetic_seed, manifest.synthetic->height,
                                          manifest.synthetic->width);
    return img.height() == manifest.crop && img.width() == manifest.crop
               ? img
               : center_crop(img, manifest.crop);
  }
  return center_crop(load_gray(entry.path), manifest.crop);
}

Image gen_synthetic_fingerprint(std::uint64_t seed, std::size_t height, std::size_t width) {
  if (height < 128 || width < 128) {
    throw DimensionError("synthetic fingerprints need at least 128x128 pixels");
  }
  constexpr double pi = std::numbers::pi;
  SplitMix rng(seed);
  const double h = static_cast<double>(height), w = static_cast<double>(width);
  const double scale = std::max(h, w);

  const double period = rng.uniform(7.0, 10.0);
  const double base_angle = rng.uniform(0.0, pi);
  const double k = 2.0 * pi / period;

  struct Wave {
    double amp, fx, fy, phase;
  };
  Wave waves[3];
  for (auto& wv : waves) {
    wv.amp = rng.uniform(1.5, 3.5);
    wv.fx = rng.uniform(-1.5, 1.5);
    wv.fy = rng.uniform(-1.5, 1.5);
    wv.phase = rng.uniform(0.0, 2.0 * pi);
  }

  const double cy = h * (0.5 + rng.uniform(-0.04, 0.04));
  const double cx = w * (0.5 + rng.uniform(-0.04, 0.04));
  const double ay = h * rng.uniform(0.40, 0.45);
  const double ax = w * rng.uniform(0.33, 0.38);

  // Phase singularities; each one splits or ends a ridge.
  struct Vortex {
    double y, x, sign;
  };
  std::vector<Vortex> vortices;
  const int wanted = 6 + static_cast<int>(rng.next() % 5);
  for (int attempt = 0; attempt < 400 && static_cast<int>(vortices.size()) < wanted; ++attempt) {
    const double r = 0.6 * std::sqrt(rng.uniform());
    const double t = rng.uniform(0.0, 2.0 * pi);
    const Vortex v{cy + ay * r * std::sin(t), cx + ax * r * std::cos(t),
                   (rng.next() & 1) ? 1.0 : -1.0};
    const bool crowded = std::any_of(vortices.begin(), vortices.end(), [&](const Vortex& o) {
      return std::hypot(o.y - v.y, o.x - v.x) < 3.0 * period;
    });
    if (!crowded) vortices.push_back(v);
  }

  const double background = 230.0;
  const double noise_amp = 0.06;
  Image out(height, width);
  for (std::size_t yi = 0; yi < height; ++yi) {
    for (std::size_t xi = 0; xi < width; ++xi) {
      const double y = static_cast<double>(yi), x = static_cast<double>(xi);
      const double ry = (y - cy) / ay, rx = (x - cx) / ax;
      const double r = std::sqrt(ry * ry + rx * rx);
      const double noise = rng.uniform(-1.0, 1.0);
      double v = background;
      if (r < 1.0) {
        double phase = k * (x * std::cos(base_angle) + y * std::sin(base_angle));
        for (const auto& wv : waves) {
          phase += wv.amp * std::sin(2.0 * pi * (wv.fx * x + wv.fy * y) / scale + wv.phase);
        }
        for (const auto& vt : vortices) phase += vt.sign * std::atan2(y - vt.y, x - vt.x);
        const double ridge = (128.0 - 95.0 * std::cos(phase)) * (1.0 + noise_amp * noise);
        // Soft transition into the background over the outer 6% of the ellipse.
        const double t = std::clamp((1.0 - r) / 0.06, 0.0, 1.0);
        v = t * ridge + (1.0 - t) * background;
      }
      out.at(yi, xi) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

}  // namespace fpc::data
