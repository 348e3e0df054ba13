#pragma once

#include <vector>

#include "tus/grid.hpp"

namespace tus {

/// Half-sample symmetric reflection of index i into [0, n).
int reflect_index(int i, int n);

/// Normalised Gaussian taps of length 2*radius+1.
std::vector<double> gaussian_taps(double sigma, int radius);

/// Separable Gaussian blur (radius ceil(4 sigma)), mirror-padded.
Image gaussian_blur(const Image& in, double sigma);

/// Keeps the radial spatial-frequency band [k_low, k_high] (cycles per metre)
/// of an image sampled at `spacing_m`; an ideal FFT mask, so applying it twice
/// equals applying it once.
Image bandpass_wavenumber(const Image& in, double spacing_m, double k_low, double k_high);

}  // namespace tus
