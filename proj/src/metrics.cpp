#include "tus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tus/filters.hpp"

namespace tus {

namespace {

// Valid-mode separable filtering: output is (nx - w + 1, ny - w + 1).
Image filter_valid(const Image& in, const std::vector<double>& taps) {
  const int w = static_cast<int>(taps.size());
  const int ox = in.nx() - w + 1;
  const int oy = in.ny() - w + 1;
  Image rows(ox, in.ny(), 0.0);
  for (int ix = 0; ix < ox; ++ix) {
    for (int iy = 0; iy < in.ny(); ++iy) {
      double s = 0.0;
      for (int k = 0; k < w; ++k) s += taps[static_cast<std::size_t>(k)] * in(ix + k, iy);
      rows(ix, iy) = s;
    }
  }
  Image out(ox, oy, 0.0);
  for (int ix = 0; ix < ox; ++ix) {
    for (int iy = 0; iy < oy; ++iy) {
      double s = 0.0;
      for (int k = 0; k < w; ++k) s += taps[static_cast<std::size_t>(k)] * rows(ix, iy + k);
      out(ix, iy) = s;
    }
  }
  return out;
}

}  // namespace

Normalized normalize01(const Image& image) {
  Normalized out{image, false};
  if (image.empty()) return out;
  const auto [lo, hi] = std::minmax_element(image.values().begin(), image.values().end());
  const double a = *lo, b = *hi;
  if (!std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("normalize01: non-finite image");
  if (b == a) {
    out.image.fill(0.0);
    out.degenerate = true;
    return out;
  }
  for (double& v : out.image.values()) v = (v - a) / (b - a);
  return out;
}

double rmse(const Image& a, const Image& b) {
  require_same_shape(a, b, "rmse");
  if (a.empty()) throw std::invalid_argument("rmse: empty images");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

double ssim(const Image& a, const Image& b, const SsimOptions& o) {
  require_same_shape(a, b, "ssim");
  if (o.window < 1 || o.window % 2 == 0) throw std::invalid_argument("ssim: window must be odd");
  if (a.nx() < o.window || a.ny() < o.window) {
    throw std::invalid_argument("ssim: image smaller than the window");
  }
  const auto taps = gaussian_taps(o.sigma, o.window / 2);
  Image aa(a.nx(), a.ny()), bb(a.nx(), a.ny()), ab(a.nx(), a.ny());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.values()[i], y = b.values()[i];
    aa.values()[i] = x * x;
    bb.values()[i] = y * y;
    ab.values()[i] = x * y;
  }
  const Image mu_a = filter_valid(a, taps);
  const Image mu_b = filter_valid(b, taps);
  const Image e_aa = filter_valid(aa, taps);
  const Image e_bb = filter_valid(bb, taps);
  const Image e_ab = filter_valid(ab, taps);
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a.values()[i], mb = mu_b.values()[i];
    const double va = e_aa.values()[i] - ma * ma;
    const double vb = e_bb.values()[i] - mb * mb;
    const double cov = e_ab.values()[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

MetricReport evaluate(const Image& prediction, const Image& truth, const SsimOptions& options) {
  const Image p = normalize01(prediction).image;
  const Image t = normalize01(truth).image;
  MetricReport r;
  r.ssim = ssim(p, t, options);
  r.rmse = rmse(p, t);
  return r;
}

}  // namespace tus
