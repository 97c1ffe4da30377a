#include "fpc/quality.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "fpc/errors.hpp"

namespace fpc::quality {

namespace {

void same_shape(const Image& a, const Image& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw DimensionError("images differ in size: " + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                         std::to_string(b.width()));
  }
}

}  // namespace

double mse(const Image& a, const Image& b) {
  same_shape(a, b);
  if (a.empty()) return 0.0;
  double s = 0.0;
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    s += d * d;
  }
  return s / static_cast<double>(pa.size());
}

double psnr_from_mse(double m) {
  if (m <= 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

double ssim(const Image& a, const Image& b, const SsimOptions& o) {
  same_shape(a, b);
  const auto win = static_cast<std::size_t>(o.window);
  if (o.window < 1 || a.height() < win || a.width() < win) {
    throw DimensionError("image smaller than the SSIM window");
  }
  std::vector<double> g(win);
  double gs = 0.0;
  const double half = (o.window - 1) / 2.0;
  for (std::size_t i = 0; i < win; ++i) {
    const double d = static_cast<double>(i) - half;
    g[i] = std::exp(-d * d / (2.0 * o.sigma * o.sigma));
    gs += g[i];
  }
  for (double& v : g) v /= gs;

  const std::size_t h = a.height(), w = a.width();
  const std::size_t oh = h - win + 1, ow = w - win + 1;
  // Five moment planes, filtered separably (rows then columns).
  std::vector<double> src[5];
  for (auto& s : src) s.resize(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    const double x = a.pixels()[i], y = b.pixels()[i];
    src[0][i] = x;
    src[1][i] = y;
    src[2][i] = x * x;
    src[3][i] = y * y;
    src[4][i] = x * y;
  }
  std::vector<double> mom[5];
  std::vector<double> tmp(h * ow);
  for (int m = 0; m < 5; ++m) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double s = 0.0;
        for (std::size_t k = 0; k < win; ++k) s += g[k] * src[m][y * w + x + k];
        tmp[y * ow + x] = s;
      }
    }
    mom[m].assign(oh * ow, 0.0);
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double s = 0.0;
        for (std::size_t k = 0; k < win; ++k) s += g[k] * tmp[(y + k) * ow + x];
        mom[m][y * ow + x] = s;
      }
    }
  }
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < oh * ow; ++i) {
    const double ma = mom[0][i], mb = mom[1][i];
    const double va = mom[2][i] - ma * ma;
    const double vb = mom[3][i] - mb * mb;
    const double cov = mom[4][i] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(oh * ow);
}

void RDCurve::normalize() {
  if (points.size() < 4) {
    throw ArityError("curve '" + label + "' has " + std::to_string(points.size()) +
                     " points; cubic BD fitting needs at least 4");
  }
  std::sort(points.begin(), points.end(),
            [](const RDPoint& x, const RDPoint& y) { return x.rate_bpp < y.rate_bpp; });
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.rate_bpp > 0.0) || !std::isfinite(p.rate_bpp) || !std::isfinite(p.psnr_db) ||
        !std::isfinite(p.ssim)) {
      throw DimensionError("curve '" + label + "' has a non-finite or non-positive point");
    }
    if (i > 0 && !(p.rate_bpp > points[i - 1].rate_bpp)) {
      throw DimensionError("curve '" + label + "' repeats a rate");
    }
  }
}

const char* quality_key_name(QualityKey k) { return k == QualityKey::psnr ? "psnr" : "ssim"; }

namespace {

// Least-squares cubic in a centered, scaled variable t = (x - shift) / scale.
struct Cubic {
  double shift = 0.0;
  double scale = 1.0;
  Eigen::Vector4d c;

  // Integral over x in [lo, hi].
  double integral(double lo, double hi) const {
    auto prim = [&](double x) {
      const double t = (x - shift) / scale;
      return scale * (c[0] * t + c[1] * t * t / 2 + c[2] * t * t * t / 3 + c[3] * t * t * t * t / 4);
    };
    return prim(hi) - prim(lo);
  }
};

Cubic fit_cubic(const std::vector<double>& x, const std::vector<double>& y) {
  Cubic f;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  f.shift = (*lo + *hi) / 2;
  f.scale = std::max((*hi - *lo) / 2, 1e-12);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(x.size()), 4);
  Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = (x[i] - f.shift) / f.scale;
    const auto r = static_cast<Eigen::Index>(i);
    a(r, 0) = 1;
    a(r, 1) = t;
    a(r, 2) = t * t;
    a(r, 3) = t * t * t;
    b(r) = y[i];
  }
  f.c = a.colPivHouseholderQr().solve(b);
  return f;
}

struct Columns {
  std::vector<double> log_rate;
  std::vector<double> quality;
};

Columns columns(RDCurve c, QualityKey key) {
  c.normalize();
  Columns out;
  for (const auto& p : c.points) {
    out.log_rate.push_back(std::log10(p.rate_bpp));
    out.quality.push_back(key == QualityKey::psnr ? p.psnr_db : p.ssim);
  }
  return out;
}

// Average of (test - anchor) over the shared x interval, y fitted against x.
double average_gap(const std::vector<double>& xa, const std::vector<double>& ya,
                   const std::vector<double>& xt, const std::vector<double>& yt, const char* axis) {
  const double lo = std::max(*std::min_element(xa.begin(), xa.end()), *std::min_element(xt.begin(), xt.end()));
  const double hi = std::min(*std::max_element(xa.begin(), xa.end()), *std::max_element(xt.begin(), xt.end()));
  if (!(hi > lo)) throw NoOverlapError(std::string("RD curves do not overlap in ") + axis);
  const Cubic fa = fit_cubic(xa, ya);
  const Cubic ft = fit_cubic(xt, yt);
  return (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
}

}  // namespace

double bd_rate(const RDCurve& anchor, const RDCurve& test, QualityKey key) {
  const Columns a = columns(anchor, key);
  const Columns t = columns(test, key);
  const double gap = average_gap(a.quality, a.log_rate, t.quality, t.log_rate, "quality");
  return (std::pow(10.0, gap) - 1.0) * 100.0;
}

double bd_quality(const RDCurve& anchor, const RDCurve& test, QualityKey key) {
  const Columns a = columns(anchor, key);
  const Columns t = columns(test, key);
  return average_gap(a.log_rate, a.quality, t.log_rate, t.quality, "rate");
}

BDResult bd_metrics(const RDCurve& anchor, const RDCurve& test, QualityKey key) {
  return {bd_rate(anchor, test, key), bd_quality(anchor, test, key)};
}

}  // namespace fpc::quality
