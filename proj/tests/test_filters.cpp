#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tus/filters.hpp"

using namespace tus;

TEST_CASE("reflect_index mirrors about the half sample") {
  CHECK(reflect_index(-1, 5) == 0);
  CHECK(reflect_index(-2, 5) == 1);
  CHECK(reflect_index(5, 5) == 4);
  CHECK(reflect_index(6, 5) == 3);
  CHECK(reflect_index(2, 5) == 2);
  CHECK(reflect_index(-13, 5) == reflect_index(12, 5));
}

TEST_CASE("gaussian taps are normalised and symmetric") {
  const auto t = gaussian_taps(1.5, 5);
  REQUIRE(t.size() == 11);
  double s = 0.0;
  for (double v : t) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  for (int k = 0; k < 5; ++k) CHECK(t[static_cast<std::size_t>(k)] == t[static_cast<std::size_t>(10 - k)]);
  CHECK(t[6] / t[5] == doctest::Approx(std::exp(-0.5 / 2.25)));
}

TEST_CASE("gaussian blur preserves constants and total mass away from edges") {
  Image c(20, 17, 3.25);
  const Image bc = gaussian_blur(c, 2.0);
  for (double v : bc.values()) CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
  Image d(41, 41, 0.0);
  d(20, 20) = 1.0;
  const Image b = gaussian_blur(d, 2.0);
  double s = 0.0;
  for (double v : b.values()) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b(20, 20) > b(21, 20));
  CHECK(b(21, 20) == doctest::Approx(b(20, 21)).epsilon(1e-15));
  CHECK_THROWS_AS(gaussian_blur(d, 0.0), std::invalid_argument);
}

TEST_CASE("bandpass keeps in-band plane waves and removes out-of-band ones") {
  const int n = 64;
  const double h = 1e-3;
  // Exact FFT-bin frequencies: 4 and 20 cycles over the grid.
  const double k_in = 4.0 / (n * h), k_out = 20.0 / (n * h);
  Image in_band(n, n), mixed(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double a = std::cos(2.0 * std::numbers::pi * k_in * i * h);
      in_band(i, j) = a;
      mixed(i, j) = a + std::cos(2.0 * std::numbers::pi * k_out * j * h) + 2.0;
    }
  }
  const Image out = bandpass_wavenumber(mixed, h, 0.5 * k_in, 2.0 * k_in);
  for (std::size_t q = 0; q < out.size(); ++q) CHECK(out.values()[q] == doctest::Approx(in_band.values()[q]).epsilon(1e-9));
  const Image twice = bandpass_wavenumber(out, h, 0.5 * k_in, 2.0 * k_in);
  for (std::size_t q = 0; q < out.size(); ++q) CHECK(twice.values()[q] == doctest::Approx(out.values()[q]).epsilon(1e-9));
  CHECK_THROWS_AS(bandpass_wavenumber(mixed, h, 2.0 * k_in, k_in), std::invalid_argument);
}
