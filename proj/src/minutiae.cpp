#include "fpc/minutiae.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

#include "fpc/errors.hpp"
#include "fpc/kernels.hpp"

namespace fpc::minutiae {

const char* kind_name(Kind k) { return k == Kind::termination ? "termination" : "bifurcation"; }

namespace {

constexpr double kPi = std::numbers::pi;

// N, NE, E, SE, S, SW, W, NW
constexpr std::array<int, 8> kDy = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr std::array<int, 8> kDx = {0, 1, 1, 1, 0, -1, -1, -1};

int ih(const Image& im) { return static_cast<int>(im.height()); }
int iw(const Image& im) { return static_cast<int>(im.width()); }

double bilinear(const std::vector<double>& plane, int h, int w, double y, double x, bool& inside) {
  if (y < 0 || x < 0 || y > h - 1 || x > w - 1) {
    inside = false;
    return 0.0;
  }
  const int y0 = std::min(static_cast<int>(y), h - 2 < 0 ? 0 : h - 2);
  const int x0 = std::min(static_cast<int>(x), w - 2 < 0 ? 0 : w - 2);
  const double fy = y - y0, fx = x - x0;
  const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  const auto at = [&](int yy, int xx) { return plane[static_cast<std::size_t>(yy) * w + xx]; };
  return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) + fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
}

}  // namespace

// ---------------------------------------------------------------------------
// Enhancement

std::vector<float> gabor_kernel(double theta, double frequency, double sigma, int size) {
  std::vector<float> k(static_cast<std::size_t>(size) * size);
  const int r = size / 2;
  // Coordinate across the ridges runs along the normal of theta.
  const double nx = -std::sin(theta), ny = std::cos(theta);
  std::vector<double> g(k.size()), h(k.size());
  double sum_g = 0.0, sum_h = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const auto i = static_cast<std::size_t>((dy + r) * size + dx + r);
      const double across = dx * nx + dy * ny;
      g[i] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      h[i] = g[i] * std::cos(2.0 * kPi * frequency * across);
      sum_g += g[i];
      sum_h += h[i];
    }
  }
  // Remove the small DC term so flat regions respond with exactly zero.
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<float>(h[i] - g[i] * sum_h / sum_g);
  return k;
}

EnhanceResult enhance_full(const Image& x, const EnhanceOptions& o) {
  const int h = ih(x), w = iw(x);
  if (h < 3 || w < 3) throw DimensionError("image too small to enhance");
  const std::size_t n = x.size();

  double mean = 0.0;
  for (auto p : x.pixels()) mean += p;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (auto p : x.pixels()) var += (p - mean) * (p - mean);
  var /= static_cast<double>(n);
  if (var <= 0.0) throw NoRidgeStructureError("image is constant");

  std::vector<double> norm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x.pixels()[i] - mean;
    const double dev = std::sqrt(o.target_variance * d * d / var);
    norm[i] = d > 0 ? o.target_mean + dev : o.target_mean - dev;
  }

  // Block grid.
  const int bs = o.block;
  const int bh = (h + bs - 1) / bs, bw = (w + bs - 1) / bs;
  const auto bidx = [&](int by, int bx) { return static_cast<std::size_t>(by) * bw + bx; };

  std::vector<std::uint8_t> block_mask(static_cast<std::size_t>(bh) * bw, 0);
  const double std_floor = o.mask_std_ratio * std::sqrt(var);
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      double s = 0.0, s2 = 0.0;
      int cnt = 0;
      for (int y = by * bs; y < std::min(h, (by + 1) * bs); ++y) {
        for (int xx = bx * bs; xx < std::min(w, (bx + 1) * bs); ++xx) {
          const double v = x.at(static_cast<std::size_t>(y), static_cast<std::size_t>(xx));
          s += v;
          s2 += v * v;
          ++cnt;
        }
      }
      const double m = s / cnt;
      const double sd = std::sqrt(std::max(0.0, s2 / cnt - m * m));
      block_mask[bidx(by, bx)] = sd > std_floor ? 1 : 0;
    }
  }

  // Gradient tensor per block (Sobel), as a doubled-angle vector.
  std::vector<double> vx(block_mask.size(), 0.0), vy(block_mask.size(), 0.0);
  const auto nv = [&](int y, int xx) {
    y = std::clamp(y, 0, h - 1);
    xx = std::clamp(xx, 0, w - 1);
    return norm[static_cast<std::size_t>(y) * w + xx];
  };
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const double gx = (nv(y - 1, xx + 1) + 2 * nv(y, xx + 1) + nv(y + 1, xx + 1)) -
                        (nv(y - 1, xx - 1) + 2 * nv(y, xx - 1) + nv(y + 1, xx - 1));
      const double gy = (nv(y + 1, xx - 1) + 2 * nv(y + 1, xx) + nv(y + 1, xx + 1)) -
                        (nv(y - 1, xx - 1) + 2 * nv(y - 1, xx) + nv(y - 1, xx + 1));
      const auto b = bidx(y / bs, xx / bs);
      vx[b] += gx * gx - gy * gy;
      vy[b] += 2 * gx * gy;
    }
  }
  // 3x3 block smoothing of the doubled-angle field.
  std::vector<double> sx(vx.size()), sy(vy.size());
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      double ax = 0.0, ay = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = by + dy, xx = bx + dx;
          if (yy < 0 || xx < 0 || yy >= bh || xx >= bw) continue;
          const double wgt = (dy == 0 ? 2.0 : 1.0) * (dx == 0 ? 2.0 : 1.0);
          ax += wgt * vx[bidx(yy, xx)];
          ay += wgt * vy[bidx(yy, xx)];
        }
      }
      sx[bidx(by, bx)] = ax;
      sy[bidx(by, bx)] = ay;
    }
  }
  // Gradient angle of a block; ridges run perpendicular to it.
  const auto block_normal = [&](int by, int bx) { return 0.5 * std::atan2(sy[bidx(by, bx)], sx[bidx(by, bx)]); };

  // Ridge period per foreground block from the x-signature.
  std::vector<double> periods;
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      if (!block_mask[bidx(by, bx)]) continue;
      const double phi = block_normal(by, bx);
      const double cy = by * bs + (std::min(h, (by + 1) * bs) - by * bs - 1) / 2.0;
      const double cx = bx * bs + (std::min(w, (bx + 1) * bs) - bx * bs - 1) / 2.0;
      const double ny = std::sin(phi), nx = std::cos(phi);
      const double ty = nx, tx = -ny;
      std::vector<double> sig(static_cast<std::size_t>(o.signature_length));
      bool inside = true;
      for (int k = 0; k < o.signature_length && inside; ++k) {
        const double u = k - o.signature_length / 2.0 + 0.5;
        double acc = 0.0;
        for (int d = 0; d < o.signature_width; ++d) {
          const double v = d - o.signature_width / 2.0 + 0.5;
          acc += bilinear(norm, h, w, cy + u * ny + v * ty, cx + u * nx + v * tx, inside);
        }
        sig[static_cast<std::size_t>(k)] = acc / o.signature_width;
      }
      if (!inside) continue;
      const auto [lo, hi] = std::minmax_element(sig.begin(), sig.end());
      if (*hi - *lo < 1.0) continue;
      std::vector<int> peaks;
      for (int k = 1; k + 1 < o.signature_length; ++k) {
        const auto i = static_cast<std::size_t>(k);
        if (sig[i] > sig[i - 1] && sig[i] >= sig[i + 1]) peaks.push_back(k);
      }
      if (peaks.size() < 2) continue;
      const double period = static_cast<double>(peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1);
      if (period >= o.min_period && period <= o.max_period) periods.push_back(period);
    }
  }
  if (periods.empty()) throw NoRidgeStructureError("no block yields a ridge frequency");
  std::sort(periods.begin(), periods.end());
  const std::size_t mid = periods.size() / 2;
  const double period = periods.size() % 2 ? periods[mid] : 0.5 * (periods[mid - 1] + periods[mid]);

  EnhanceResult r;
  r.frequency = 1.0 / period;
  r.mask = BinaryImage(x.height(), x.width());
  r.orientation.assign(n, 0.0f);

  // Per-pixel orientation: bilinear blend of block vectors at block centers.
  std::vector<int> index(n, -1);
  const int bins = o.orientation_bins;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) / bs - 0.5, 0.0, static_cast<double>(bh - 1));
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, bh - 1);
    const double ay = fy - y0;
    for (int xx = 0; xx < w; ++xx) {
      const double fx = std::clamp((xx + 0.5) / bs - 0.5, 0.0, static_cast<double>(bw - 1));
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, bw - 1);
      const double ax = fx - x0;
      const auto blend = [&](const std::vector<double>& f) {
        return (1 - ay) * ((1 - ax) * f[bidx(y0, x0)] + ax * f[bidx(y0, x1)]) +
               ay * ((1 - ax) * f[bidx(y1, x0)] + ax * f[bidx(y1, x1)]);
      };
      double theta = 0.5 * std::atan2(blend(sy), blend(sx)) + kPi / 2;
      theta = std::fmod(theta + kPi, kPi);
      const auto i = static_cast<std::size_t>(y) * w + xx;
      r.orientation[i] = static_cast<float>(theta);
      const bool fg = block_mask[bidx(y / bs, xx / bs)] != 0;
      r.mask.pixels()[i] = fg ? 1 : 0;
      if (fg) index[i] = static_cast<int>(std::lround(theta / kPi * bins)) % bins;
    }
  }

  std::vector<float> bank;
  bank.reserve(static_cast<std::size_t>(bins) * o.gabor_size * o.gabor_size);
  for (int b = 0; b < bins; ++b) {
    const auto k = gabor_kernel(b * kPi / bins, r.frequency, o.gabor_sigma, o.gabor_size);
    bank.insert(bank.end(), k.begin(), k.end());
  }
  std::vector<float> centered(n), response(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = static_cast<float>(norm[i] - o.target_mean);
  kernels::steered_filter(centered, x.height(), x.width(), bank, static_cast<std::size_t>(o.gabor_size),
                          index, response);
  r.ridges = BinaryImage(x.height(), x.width());
  for (std::size_t i = 0; i < n; ++i) r.ridges.pixels()[i] = index[i] >= 0 && response[i] < 0.0f ? 1 : 0;
  return r;
}

BinaryImage enhance(const Image& x, const EnhanceOptions& options) { return enhance_full(x, options).ridges; }

// ---------------------------------------------------------------------------
// Thinning

std::uint8_t neighborhood(const BinaryImage& b, int y, int x) {
  std::uint8_t code = 0;
  for (int i = 0; i < 8; ++i) {
    const int yy = y + kDy[static_cast<std::size_t>(i)], xx = x + kDx[static_cast<std::size_t>(i)];
    if (yy < 0 || xx < 0 || yy >= ih(b) || xx >= iw(b)) continue;
    if (b.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx))) code |= static_cast<std::uint8_t>(1u << i);
  }
  return code;
}

int crossing_number(std::uint8_t nb) {
  const auto rotated = static_cast<std::uint8_t>((nb >> 1) | (nb << 7));
  return std::popcount(static_cast<unsigned>(nb ^ rotated)) / 2;
}

namespace {

// A pixel is simple when its 8-neighborhood holds exactly one 8-connected
// foreground component and exactly one 4-connected background component
// touching the center's 4-neighbors.
std::array<bool, 256> make_simple_table() {
  std::array<bool, 256> table{};
  for (int code = 0; code < 256; ++code) {
    int grid[3][3] = {};
    for (int i = 0; i < 8; ++i) grid[1 + kDy[static_cast<std::size_t>(i)]][1 + kDx[static_cast<std::size_t>(i)]] = (code >> i) & 1;
    auto components = [&](int value, bool eight, bool need_four_adjacent) {
      int seen[3][3] = {};
      int count = 0;
      for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 3; ++x) {
          if ((y == 1 && x == 1) || seen[y][x] || grid[y][x] != value) continue;
          bool touches = false;
          int stack[9][2];
          int top = 0;
          stack[top][0] = y;
          stack[top][1] = x;
          ++top;
          seen[y][x] = 1;
          while (top) {
            --top;
            const int cy = stack[top][0], cx = stack[top][1];
            if (std::abs(cy - 1) + std::abs(cx - 1) == 1) touches = true;
            for (int dy = -1; dy <= 1; ++dy) {
              for (int dx = -1; dx <= 1; ++dx) {
                if ((dy == 0 && dx == 0) || (!eight && dy != 0 && dx != 0)) continue;
                const int ny = cy + dy, nx = cx + dx;
                if (ny < 0 || nx < 0 || ny > 2 || nx > 2 || (ny == 1 && nx == 1)) continue;
                if (seen[ny][nx] || grid[ny][nx] != value) continue;
                seen[ny][nx] = 1;
                stack[top][0] = ny;
                stack[top][1] = nx;
                ++top;
              }
            }
          }
          if (!need_four_adjacent || touches) ++count;
        }
      }
      return count;
    };
    table[static_cast<std::size_t>(code)] = components(1, true, false) == 1 && components(0, false, true) == 1;
  }
  return table;
}

const std::array<bool, 256>& simple_table() {
  static const std::array<bool, 256> t = make_simple_table();
  return t;
}

}  // namespace

BinaryImage skeletonize(const BinaryImage& input) {
  BinaryImage b = input;
  for (auto& p : b.pixels()) p = p ? 1 : 0;
  const auto& simple = simple_table();
  const int h = ih(b), w = iw(b);
  // N, S, E, W border directions as neighborhood bit positions.
  constexpr std::array<int, 4> kSides = {0, 4, 2, 6};
  std::vector<std::pair<int, int>> marked;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int side : kSides) {
      marked.clear();
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!b.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x))) continue;
          const std::uint8_t nb = neighborhood(b, y, x);
          if (nb & (1u << side)) continue;
          if (std::popcount(static_cast<unsigned>(nb)) < 2 || !simple[nb]) continue;
          marked.emplace_back(y, x);
        }
      }
      // Re-check against the current state so each removal keeps topology.
      for (const auto& [y, x] : marked) {
        const std::uint8_t nb = neighborhood(b, y, x);
        if (std::popcount(static_cast<unsigned>(nb)) < 2 || !simple[nb]) continue;
        b.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 0;
        changed = true;
      }
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

std::vector<int> label_components(const BinaryImage& b, std::size_t* count) {
  const int h = ih(b), w = iw(b);
  std::vector<int> label(b.size(), -1);
  std::vector<int> stack;
  int next = 0;
  for (int start = 0; start < h * w; ++start) {
    if (!b.pixels()[static_cast<std::size_t>(start)] || label[static_cast<std::size_t>(start)] >= 0) continue;
    label[static_cast<std::size_t>(start)] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int y = p / w, x = p % w;
      for (int i = 0; i < 8; ++i) {
        const int yy = y + kDy[static_cast<std::size_t>(i)], xx = x + kDx[static_cast<std::size_t>(i)];
        if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
        const auto q = static_cast<std::size_t>(yy * w + xx);
        if (!b.pixels()[q] || label[q] >= 0) continue;
        label[q] = next;
        stack.push_back(static_cast<int>(q));
      }
    }
    ++next;
  }
  if (count) *count = static_cast<std::size_t>(next);
  return label;
}

// Mask shrunk by r pixels (square structuring element); outside the image
// counts as background.
std::vector<std::uint8_t> erode(const BinaryImage& mask, int r) {
  const int h = ih(mask), w = iw(mask);
  std::vector<int> integral(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  const auto I = [&](int y, int x) -> int& { return integral[static_cast<std::size_t>(y) * (w + 1) + x]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      I(y + 1, x + 1) = I(y, x + 1) + I(y + 1, x) - I(y, x) +
                        (mask.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) ? 1 : 0);
    }
  }
  std::vector<std::uint8_t> out(mask.size(), 0);
  const int side = 2 * r + 1;
  for (int y = r; y < h - r; ++y) {
    for (int x = r; x < w - r; ++x) {
      const int s = I(y + r + 1, x + r + 1) - I(y - r, x + r + 1) - I(y + r + 1, x - r) + I(y - r, x - r);
      out[static_cast<std::size_t>(y) * w + x] = s == side * side ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

std::size_t count_components(const BinaryImage& b) {
  std::size_t n = 0;
  label_components(b, &n);
  return n;
}

std::vector<Minutia> extract(const BinaryImage& skeleton, const ExtractOptions& o, const BinaryImage& mask) {
  const int h = ih(skeleton), w = iw(skeleton);
  if (!mask.empty() && (mask.height() != skeleton.height() || mask.width() != skeleton.width())) {
    throw DimensionError("mask and skeleton differ in size");
  }
  const std::vector<std::uint8_t> roi = mask.empty() ? std::vector<std::uint8_t>() : erode(mask, o.mask_erosion);
  const int m = o.border_margin;
  std::vector<Minutia> found;
  for (int y = m; y < h - m; ++y) {
    for (int x = m; x < w - m; ++x) {
      const auto i = static_cast<std::size_t>(y) * w + x;
      if (!skeleton.pixels()[i]) continue;
      if (!roi.empty() && !roi[i]) continue;
      const int cn = crossing_number(neighborhood(skeleton, y, x));
      if (cn == 1) found.push_back({x, y, Kind::termination});
      if (cn == 3) found.push_back({x, y, Kind::bifurcation});
    }
  }
  if (o.prune_distance <= 0.0) return found;

  const std::vector<int> label = label_components(skeleton, nullptr);
  std::vector<bool> drop(found.size(), false);
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (found[i].kind != Kind::termination) continue;
    for (std::size_t j = i + 1; j < found.size(); ++j) {
      if (found[j].kind != Kind::termination) continue;
      const double dy = found[i].y - found[j].y, dx = found[i].x - found[j].x;
      if (std::hypot(dy, dx) >= o.prune_distance) continue;
      const auto li = label[static_cast<std::size_t>(found[i].y) * w + found[i].x];
      const auto lj = label[static_cast<std::size_t>(found[j].y) * w + found[j].x];
      if (li == lj) drop[i] = drop[j] = true;
    }
  }
  std::vector<Minutia> kept;
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (!drop[i]) kept.push_back(found[i]);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Matching

std::vector<MatchedPair> match_pairs(const std::vector<Minutia>& a, const std::vector<Minutia>& b,
                                     double threshold) {
  std::vector<MatchedPair> cand;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = std::hypot(static_cast<double>(a[i].x - b[j].x), static_cast<double>(a[i].y - b[j].y));
      if (d <= threshold) cand.push_back({i, j, d});
    }
  }
  std::sort(cand.begin(), cand.end(), [&](const MatchedPair& p, const MatchedPair& q) {
    const auto key = [&](const MatchedPair& m) {
      const Minutia& u = a[m.original];
      const Minutia& v = b[m.compressed];
      return std::make_tuple(m.distance, u.y, u.x, int(u.kind), v.y, v.x, int(v.kind));
    };
    return key(p) < key(q);
  });
  std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
  std::vector<MatchedPair> out;
  for (const auto& c : cand) {
    if (used_a[c.original] || used_b[c.compressed]) continue;
    used_a[c.original] = used_b[c.compressed] = true;
    out.push_back(c);
  }
  return out;
}

MinutiaeReport match(const std::vector<Minutia>& a, const std::vector<Minutia>& b, double threshold) {
  MinutiaeReport r;
  for (const auto& m : a) (m.kind == Kind::termination ? r.original_t : r.original_b)++;
  for (const auto& m : b) (m.kind == Kind::termination ? r.compressed_t : r.compressed_b)++;
  const auto pairs = match_pairs(a, b, threshold);
  std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
  for (const auto& p : pairs) {
    used_a[p.original] = used_b[p.compressed] = true;
    const Kind ka = a[p.original].kind, kb = b[p.compressed].kind;
    if (ka == kb) {
      (ka == Kind::termination ? r.kept_t : r.kept_b)++;
    } else {
      (ka == Kind::termination ? r.changed_t : r.changed_b)++;
    }
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!used_a[i]) (a[i].kind == Kind::termination ? r.lost_t : r.lost_b)++;
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!used_b[j]) (b[j].kind == Kind::termination ? r.extra_t : r.extra_b)++;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pipeline

std::vector<Minutia> find_minutiae(const Image& x, const PipelineOptions& o, const BinaryImage& mask) {
  const EnhanceResult e = enhance_full(x, o.enhance);
  return extract(skeletonize(e.ridges), o.extract, mask.empty() ? e.mask : mask);
}

PairEvaluation evaluate_pair_detail(const Image& original, const Image& compressed, const PipelineOptions& o) {
  if (original.height() != compressed.height() || original.width() != compressed.width()) {
    throw DimensionError("original and compressed images differ in size");
  }
  PairEvaluation ev;
  const EnhanceResult e = enhance_full(original, o.enhance);
  ev.original = extract(skeletonize(e.ridges), o.extract, e.mask);
  try {
    ev.compressed = find_minutiae(compressed, o, e.mask);
  } catch (const NoRidgeStructureError&) {
    ev.compressed.clear();
  }
  ev.report = match(ev.original, ev.compressed, o.threshold);
  return ev;
}

MinutiaeReport evaluate_pair(const Image& original, const Image& compressed, const PipelineOptions& o) {
  return evaluate_pair_detail(original, compressed, o).report;
}

std::string report_csv_columns() {
  return "kept_t,kept_b,extra_t,extra_b,changed_t,changed_b,lost_t,lost_b,"
         "original_t,original_b,compressed_t,compressed_b";
}

std::string report_csv_values(const MinutiaeReport& r) {
  std::ostringstream s;
  s << r.kept_t << ',' << r.kept_b << ',' << r.extra_t << ',' << r.extra_b << ',' << r.changed_t << ','
    << r.changed_b << ',' << r.lost_t << ',' << r.lost_b << ',' << r.original_t << ',' << r.original_b << ','
    << r.compressed_t << ',' << r.compressed_b;
  return s.str();
}

}  // namespace fpc::minutiae
