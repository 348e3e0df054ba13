#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "tus/acquisition.hpp"
#include "tus/filters.hpp"
#include "tus/phantom.hpp"
#include "tus/solver.hpp"

namespace testutil {

inline tus::VelocityModel smooth_random_model(int nx, int ny, double h, unsigned seed,
                                              double lo = 1400.0, double hi = 2600.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  tus::Image noise(nx, ny);
  for (auto& v : noise.values()) v = u(rng);
  tus::Image s = tus::gaussian_blur(noise, 3.0);
  double m = 0.0;
  for (double v : s.values()) m = std::max(m, std::abs(v));
  tus::VelocityModel model = tus::constant_model(nx, ny, h, 0.5 * (lo + hi));
  for (std::size_t i = 0; i < s.size(); ++i) {
    model.values.values()[i] += 0.5 * (hi - lo) * s.values()[i] / m;
  }
  return model;
}

/// Elements at the given points; every element fires once and the others record.
inline tus::AcquisitionGeometry point_geometry(const std::vector<tus::Point2>& pts) {
  tus::AcquisitionGeometry g;
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) g.elements.push_back({pts[static_cast<std::size_t>(i)], i});
  g.mode = tus::AcquisitionMode::Partial;
  for (int i = 0; i < n; ++i) {
    tus::Shot s;
    s.source_element = i;
    for (int j = 0; j < n; ++j) {
      if (j != i) s.receiver_elements.push_back(j);
    }
    s.sweep_id = i;
    g.shots.push_back(s);
  }
  return g;
}

inline tus::Point2 at_node(int ix, int iy, double h) { return {ix * h, iy * h}; }

/// Peak position of a sampled signal with parabolic refinement, in samples.
inline double refined_argmax(const std::vector<double>& v) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[k]) k = i;
  }
  if (k == 0 || k + 1 >= v.size()) return static_cast<double>(k);
  const double a = v[k - 1], b = v[k], c = v[k + 1];
  const double d = a - 2.0 * b + c;
  return d == 0.0 ? static_cast<double>(k) : k + 0.5 * (a - c) / d;
}

inline double ricker_value(double t, double f0) {
  const double tau = t - 1.5 / f0;
  const double a = std::numbers::pi * std::numbers::pi * f0 * f0 * tau * tau;
  return (1.0 - 2.0 * a) * std::exp(-a);
}

/// Free-space 2D response to a Ricker point source at distance c*T:
/// (1/2pi) * integral_0^{acosh(t/T)} f(t - T cosh(theta)) dtheta.
inline double green2d_ricker(double t, double T, double f0) {
  if (t <= T) return 0.0;
  const double top = std::acosh(t / T);
  const int n = 4000;
  const double d = top / n;
  double s = 0.5 * (ricker_value(t - T, f0) + ricker_value(t - T * std::cosh(top), f0));
  for (int i = 1; i < n; ++i) s += ricker_value(t - T * std::cosh(i * d), f0);
  return s * d / (2.0 * std::numbers::pi);
}

}  // namespace testutil
