#include "tus/filters.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace tus {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

}  // namespace

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_taps(double sigma, int radius) {
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * (k * k) / (sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = w;
    sum += w;
  }
  for (double& w : taps) w /= sum;
  return taps;
}

Image gaussian_blur(const Image& in, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  const auto taps = gaussian_taps(sigma, radius);
  const int nx = in.nx(), ny = in.ny();

  Image tmp(nx, ny);
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[static_cast<std::size_t>(k + radius)] * in(ix, reflect_index(iy + k, ny));
      }
      tmp(ix, iy) = acc;
    }
  }
  Image out(nx, ny);
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[static_cast<std::size_t>(k + radius)] * tmp(reflect_index(ix + k, nx), iy);
      }
      out(ix, iy) = acc;
    }
  }
  return out;
}

Image bandpass_wavenumber(const Image& in, double spacing_m, double k_low, double k_high) {
  if (!(spacing_m > 0.0)) throw std::invalid_argument("bandpass_wavenumber: spacing must be > 0");
  if (!(k_low >= 0.0 && k_high > k_low)) throw std::invalid_argument("bandpass_wavenumber: need 0 <= k_low < k_high");
  if (in.empty()) throw std::invalid_argument("bandpass_wavenumber: empty image");
  const int nx = in.nx(), ny = in.ny();
  const int nyc = ny / 2 + 1;
  std::vector<double> real(in.values().begin(), in.values().end());
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(nx) * nyc);
  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());

  Plan forward, inverse;
  {
    std::lock_guard lock(fftw_planner_mutex());
    forward.reset(fftw_plan_dft_r2c_2d(nx, ny, real.data(), cplx, FFTW_ESTIMATE));
    inverse.reset(fftw_plan_dft_c2r_2d(nx, ny, cplx, real.data(), FFTW_ESTIMATE));
  }
  if (!forward || !inverse) throw std::runtime_error("bandpass_wavenumber: FFT planning failed");
  fftw_execute(forward.get());

  const double dkx = 1.0 / (nx * spacing_m);
  const double dky = 1.0 / (ny * spacing_m);
  for (int ix = 0; ix < nx; ++ix) {
    const int fx = ix <= nx / 2 ? ix : ix - nx;
    for (int iy = 0; iy < nyc; ++iy) {
      const double k = std::hypot(fx * dkx, iy * dky);
      if (k < k_low || k > k_high) spec[static_cast<std::size_t>(ix) * nyc + iy] = 0.0;
    }
  }
  fftw_execute(inverse.get());

  Image out(nx, ny);
  const double scale = 1.0 / (static_cast<double>(nx) * ny);
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = real[i] * scale;
  return out;
}

}  // namespace tus
