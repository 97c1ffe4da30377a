#include "fpc/wavelet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fpc/entropy.hpp"
#include "fpc/errors.hpp"

namespace fpc::wavelet {

void WaveletConfig::validate() const {
  if (levels < 1 || levels > 12) throw ConfigError("wavelet levels must be in [1, 12]");
  if (!(quant_step > 0.0) || !std::isfinite(quant_step)) throw ConfigError("quant_step must be > 0");
  if (target_ratio < 0.0 || !std::isfinite(target_ratio)) throw ConfigError("target_ratio must be >= 0");
}

std::vector<Subband> Pyramid::subbands() const {
  std::vector<Subband> out;
  const std::size_t h = height >> levels, w = width >> levels;
  out.push_back({levels, Orientation::ll, 0, 0, h, w});
  for (int l = levels; l >= 1; --l) {
    const std::size_t bh = height >> l, bw = width >> l;
    out.push_back({l, Orientation::hl, 0, bw, bh, bw});
    out.push_back({l, Orientation::lh, bh, 0, bh, bw});
    out.push_back({l, Orientation::hh, bh, bw, bh, bw});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lifting

namespace {

// One lifting step over the samples of the given parity, with whole-sample
// symmetric extension at both ends.
void lift_step(std::vector<double>& x, std::size_t n, std::size_t parity, double c) {
  for (std::size_t i = parity; i < n; i += 2) {
    const double left = i == 0 ? x[1] : x[i - 1];
    const double right = i + 1 == n ? x[n - 2] : x[i + 1];
    x[i] += c * (left + right);
  }
}

void deinterleave(std::vector<double>& x, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n / 2; ++i) {
    t[i] = x[2 * i];
    t[n / 2 + i] = x[2 * i + 1];
  }
  std::copy(t.begin(), t.end(), x.begin());
}

void interleave(std::vector<double>& x, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n / 2; ++i) {
    t[2 * i] = x[i];
    t[2 * i + 1] = x[n / 2 + i];
  }
  std::copy(t.begin(), t.end(), x.begin());
}

}  // namespace

void lift_forward(std::vector<double>& x, Filter f) {
  const std::size_t n = x.size();
  if (n < 2 || n % 2) throw DimensionError("lifting needs an even length >= 2");
  if (f == Filter::haar) {
    for (std::size_t i = 0; i < n; i += 2) {
      const double a = x[i], b = x[i + 1];
      x[i] = (a + b) / 2;
      x[i + 1] = a - b;
    }
  } else {
    lift_step(x, n, 1, kAlpha);
    lift_step(x, n, 0, kBeta);
    lift_step(x, n, 1, kGamma);
    lift_step(x, n, 0, kDelta);
    for (std::size_t i = 0; i < n; i += 2) {
      x[i] /= kK;
      x[i + 1] *= kK;
    }
  }
  deinterleave(x, n);
}

void lift_inverse(std::vector<double>& x, Filter f) {
  const std::size_t n = x.size();
  if (n < 2 || n % 2) throw DimensionError("lifting needs an even length >= 2");
  interleave(x, n);
  if (f == Filter::haar) {
    for (std::size_t i = 0; i < n; i += 2) {
      const double lo = x[i], hi = x[i + 1];
      x[i] = lo + hi / 2;
      x[i + 1] = lo - hi / 2;
    }
  } else {
    for (std::size_t i = 0; i < n; i += 2) {
      x[i] *= kK;
      x[i + 1] /= kK;
    }
    lift_step(x, n, 0, -kDelta);
    lift_step(x, n, 1, -kGamma);
    lift_step(x, n, 0, -kBeta);
    lift_step(x, n, 1, -kAlpha);
  }
}

namespace {

void check_levels(std::size_t height, std::size_t width, int levels) {
  if (levels < 1) throw ConfigError("wavelet levels must be >= 1");
  const std::size_t unit = std::size_t{1} << levels;
  if (height == 0 || width == 0 || height % unit || width % unit) {
    throw DimensionError("image " + std::to_string(height) + "x" + std::to_string(width) +
                         " is not divisible by 2^" + std::to_string(levels));
  }
}

}  // namespace

Pyramid dwt_forward(const std::vector<double>& plane, std::size_t height, std::size_t width,
                    int levels, Filter f) {
  check_levels(height, width, levels);
  if (plane.size() != height * width) throw DimensionError("plane size does not match extents");
  Pyramid p{height, width, levels, f, plane};
  std::vector<double> line;
  std::size_t h = height, w = width;
  for (int l = 0; l < levels; ++l, h /= 2, w /= 2) {
    line.resize(w);
    for (std::size_t y = 0; y < h; ++y) {
      std::copy_n(&p.coeffs[y * width], w, line.begin());
      lift_forward(line, f);
      std::copy_n(line.begin(), w, &p.coeffs[y * width]);
    }
    line.resize(h);
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t y = 0; y < h; ++y) line[y] = p.at(y, x);
      lift_forward(line, f);
      for (std::size_t y = 0; y < h; ++y) p.at(y, x) = line[y];
    }
  }
  return p;
}

Pyramid dwt_forward(const Image& x, int levels, Filter f) {
  std::vector<double> plane(x.pixels().begin(), x.pixels().end());
  return dwt_forward(plane, x.height(), x.width(), levels, f);
}

std::vector<double> dwt_inverse(const Pyramid& p) {
  check_levels(p.height, p.width, p.levels);
  Pyramid q = p;
  std::vector<double> line;
  for (int l = p.levels - 1; l >= 0; --l) {
    const std::size_t h = p.height >> l, w = p.width >> l;
    line.resize(h);
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t y = 0; y < h; ++y) line[y] = q.at(y, x);
      lift_inverse(line, p.filter);
      for (std::size_t y = 0; y < h; ++y) q.at(y, x) = line[y];
    }
    line.resize(w);
    for (std::size_t y = 0; y < h; ++y) {
      std::copy_n(&q.coeffs[y * p.width], w, line.begin());
      lift_inverse(line, p.filter);
      std::copy_n(line.begin(), w, &q.coeffs[y * p.width]);
    }
  }
  return std::move(q.coeffs);
}

// ---------------------------------------------------------------------------
// Quantization

std::int32_t deadzone_quantize(double c, double step) {
  const double m = std::floor(std::abs(c) / step);
  const auto q = static_cast<std::int32_t>(std::min(m, 1.0e9));
  return c < 0 ? -q : q;
}

double deadzone_dequantize(std::int32_t q, double step) {
  if (q == 0) return 0.0;
  const double m = (std::abs(static_cast<double>(q)) + 0.5) * step;
  return q < 0 ? -m : m;
}

double subband_step(const Subband& s, int levels, double base_step) {
  const int l = s.orientation == Orientation::ll ? levels : s.level - 1;
  return base_step / static_cast<double>(std::uint64_t{1} << l);
}

// ---------------------------------------------------------------------------
// Subband coding
//
// Side information (z segment): u8 levels, u8 filter, f64 base step, then per
// subband an i32 offset subtracted from every index, a u16 zero probability
// and a u8 geometric parameter. Coefficients (y segment): per subband in
// raster order, magnitude through a 64-symbol table (escape beyond) and a
// sign bit for nonzero magnitudes.

namespace {

constexpr int kMagnitudeSymbols = 64;

struct BandModel {
  std::int32_t offset = 0;
  std::uint16_t zero_prob = 32768;  // P(0) * 65535
  std::uint8_t theta = 128;         // geometric ratio * 256
};

entropy::CdfTable band_table(const BandModel& m) {
  const double p0 = std::clamp(m.zero_prob / 65535.0, 1e-4, 1.0 - 1e-4);
  const double theta = m.theta / 256.0;
  std::vector<double> pmf(kMagnitudeSymbols);
  pmf[0] = p0;
  double t = (1.0 - p0) * (1.0 - theta);
  for (int k = 1; k < kMagnitudeSymbols; ++k, t *= theta) pmf[static_cast<std::size_t>(k)] = t;
  return entropy::make_cdf_table(pmf, 0);
}

BandModel fit_band(const std::vector<std::int32_t>& q) {
  BandModel m;
  if (q.empty()) return m;
  std::size_t zeros = 0;
  double sum = 0.0;
  for (std::int32_t v : q) {
    if (v == 0) {
      ++zeros;
    } else {
      sum += std::abs(static_cast<double>(v));
    }
  }
  const double p0 = static_cast<double>(zeros) / static_cast<double>(q.size());
  m.zero_prob = static_cast<std::uint16_t>(std::lround(std::clamp(p0, 0.0, 1.0) * 65535.0));
  const std::size_t nonzero = q.size() - zeros;
  const double mean = nonzero ? sum / static_cast<double>(nonzero) : 1.0;
  const double theta = 1.0 - 1.0 / std::max(mean, 1.0);
  m.theta = static_cast<std::uint8_t>(std::clamp<long>(std::lround(theta * 256.0), 1, 255));
  return m;
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::make_unsigned_t<T> u;
  std::memcpy(&u, &v, sizeof u);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

template <typename T>
T get(std::span<const std::uint8_t> b, std::size_t& pos) {
  if (b.size() - pos < sizeof(T)) throw TruncatedError("wavelet side information truncated");
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<std::make_unsigned_t<T>>(static_cast<std::make_unsigned_t<T>>(b[pos + i]) << (8 * i));
  }
  pos += sizeof(T);
  T v;
  std::memcpy(&v, &u, sizeof v);
  return v;
}

std::vector<std::int32_t> band_indices(const Pyramid& p, const Subband& s, double step) {
  std::vector<std::int32_t> q;
  q.reserve(s.height * s.width);
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) q.push_back(deadzone_quantize(p.at(s.top + y, s.left + x), step));
  }
  return q;
}

codec::Bitstream encode_pyramid(const Pyramid& p, double base_step) {
  codec::Bitstream b;
  b.header.variant = codec::StreamVariant::wavelet;
  b.header.height = static_cast<std::uint32_t>(p.height);
  b.header.width = static_cast<std::uint32_t>(p.width);
  put<std::uint8_t>(b.z_stream, static_cast<std::uint8_t>(p.levels));
  put<std::uint8_t>(b.z_stream, static_cast<std::uint8_t>(p.filter));
  put<std::uint64_t>(b.z_stream, std::bit_cast<std::uint64_t>(base_step));

  entropy::RangeEncoder enc;
  for (const Subband& s : p.subbands()) {
    std::vector<std::int32_t> q = band_indices(p, s, subband_step(s, p.levels, base_step));
    BandModel m;
    if (s.orientation == Orientation::ll && !q.empty()) {
      double sum = 0.0;
      for (std::int32_t v : q) sum += v;
      m.offset = static_cast<std::int32_t>(std::lround(sum / static_cast<double>(q.size())));
      for (std::int32_t& v : q) v -= m.offset;
    }
    const BandModel fitted = fit_band(q);
    m.zero_prob = fitted.zero_prob;
    m.theta = fitted.theta;
    put<std::int32_t>(b.z_stream, m.offset);
    put<std::uint16_t>(b.z_stream, m.zero_prob);
    put<std::uint8_t>(b.z_stream, m.theta);
    const entropy::CdfTable table = band_table(m);
    for (std::int32_t v : q) {
      enc.encode_value(table, v < 0 ? -v : v);
      if (v != 0) enc.encode_bit(v < 0);
    }
  }
  b.y_stream = enc.finish();
  return b;
}

}  // namespace

double compression_ratio(const Image& x, const codec::Bitstream& b) {
  return static_cast<double>(x.size()) / static_cast<double>(b.total_bytes());
}

BaselineResult encode_baseline(const Image& x, const WaveletConfig& cfg) {
  cfg.validate();
  const Pyramid p = dwt_forward(x, cfg.levels, cfg.filter);
  auto at_step = [&](double step) {
    BaselineResult r{encode_pyramid(p, step), step, 0.0};
    r.ratio = compression_ratio(x, r.stream);
    return r;
  };
  if (cfg.target_ratio <= 0.0) return at_step(cfg.quant_step);

  // Larger steps give higher ratios; bisect on log(step).
  const double target = cfg.target_ratio;
  auto close = [&](const BaselineResult& r) { return std::abs(r.ratio / target - 1.0) <= 0.05; };
  double lo = std::log(1e-4), hi = std::log(1e5);
  BaselineResult best = at_step(std::exp(hi));
  if (best.ratio < target * 0.95) {
    throw ConfigError("compression ratio " + std::to_string(target) + " is unreachable for a " +
                      std::to_string(x.height()) + "x" + std::to_string(x.width()) +
                      " image (maximum " + std::to_string(best.ratio) + ")");
  }
  if (close(best) && best.ratio <= target) return best;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    BaselineResult r = at_step(std::exp(mid));
    if (close(r)) return r;
    (r.ratio < target ? lo : hi) = mid;
  }
  throw ConfigError("no quantizer step reaches compression ratio " + std::to_string(target) +
                    " within 5%");
}

Image decode_baseline(const codec::Bitstream& b) {
  if (b.header.variant != codec::StreamVariant::wavelet) throw FormatError("not a wavelet bitstream");
  std::size_t pos = 0;
  const std::span<const std::uint8_t> side(b.z_stream);
  Pyramid p;
  p.height = b.header.height;
  p.width = b.header.width;
  p.levels = get<std::uint8_t>(side, pos);
  const auto filter = get<std::uint8_t>(side, pos);
  if (filter > 1) throw FormatError("unknown wavelet filter " + std::to_string(filter));
  p.filter = static_cast<Filter>(filter);
  const double base_step = std::bit_cast<double>(get<std::uint64_t>(side, pos));
  if (!(base_step > 0.0) || !std::isfinite(base_step)) throw FormatError("bad quantizer step");
  check_levels(p.height, p.width, p.levels);
  p.coeffs.assign(p.height * p.width, 0.0);

  entropy::RangeDecoder dec(b.y_stream);
  for (const Subband& s : p.subbands()) {
    BandModel m;
    m.offset = get<std::int32_t>(side, pos);
    m.zero_prob = get<std::uint16_t>(side, pos);
    m.theta = get<std::uint8_t>(side, pos);
    const entropy::CdfTable table = band_table(m);
    const double step = subband_step(s, p.levels, base_step);
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x) {
        std::int32_t v = dec.decode_value(table);
        if (v != 0 && dec.decode_bit()) v = -v;
        p.at(s.top + y, s.left + x) = deadzone_dequantize(v + m.offset, step);
      }
    }
  }
  dec.finish();
  if (pos != side.size()) throw FormatError("unused wavelet side information");

  const std::vector<double> plane = dwt_inverse(p);
  Image out(p.height, p.width);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    out.pixels()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(plane[i]), 0L, 255L));
  }
  return out;
}

// ---------------------------------------------------------------------------
// External results

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  for (auto& s : cells) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return cells;
}

double number(const std::string& s, std::size_t line, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("external CSV line " + std::to_string(line) + ": column '" + column +
                      "' is not a number: '" + s + "'");
  }
}

}  // namespace

std::vector<ExternalResult> parse_external_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) header = split_csv_line(line);
  }
  const char* required[] = {"image_id", "codec", "bytes", "psnr", "ssim"};
  std::size_t col[5];
  for (int i = 0; i < 5; ++i) {
    const auto it = std::find(header.begin(), header.end(), required[i]);
    if (it == header.end()) throw ConfigError(std::string("external CSV lacks column '") + required[i] + "'");
    col[i] = static_cast<std::size_t>(it - header.begin());
  }
  std::vector<ExternalResult> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < header.size()) {
      throw ConfigError("external CSV line " + std::to_string(lineno) + " has " +
                        std::to_string(cells.size()) + " cells, header has " + std::to_string(header.size()));
    }
    ExternalResult r;
    r.image_id = cells[col[0]];
    r.codec = cells[col[1]];
    if (const auto at = r.codec.find('@'); at != std::string::npos) {
      r.quality = r.codec.substr(at + 1);
      r.codec.resize(at);
    }
    r.bytes = number(cells[col[2]], lineno, "bytes");
    r.psnr = number(cells[col[3]], lineno, "psnr");
    r.ssim = number(cells[col[4]], lineno, "ssim");
    if (!(r.bytes > 0)) throw ConfigError("external CSV line " + std::to_string(lineno) + ": bytes must be > 0");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ExternalResult> read_external_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open external CSV " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_external_csv(ss.str());
}

}  // namespace fpc::wavelet
