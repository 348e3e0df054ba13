#pragma once

#include <vector>

#include "tus/grid.hpp"

namespace tus {

struct Normalized {
  Image image;
  /// Set when the input was constant; the image is then all zeros.
  bool degenerate = false;
};

/// (x - min) / (max - min).
Normalized normalize01(const Image& image);

/// sqrt(mean((a - b)^2)) on the values as given.
double rmse(const Image& a, const Image& b);

struct SsimOptions {
  double sigma = 1.5;
  int window = 11;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean local SSIM over every full window position (Gaussian-weighted
/// statistics). Throws if the images differ in shape or are smaller than the
/// window.
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});

struct MetricReport {
  double ssim = 0.0;
  double rmse = 0.0;
  std::vector<MetricReport> per_slice;
};

/// Both metrics after normalize01 of each input.
MetricReport evaluate(const Image& prediction, const Image& truth, const SsimOptions& options = {});

}  // namespace tus
