#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tus/io.hpp"

namespace tus::app {

/// Entry point of the `tus` command line; returns the process exit code.
/// Success summaries go to `out`, error objects (JSON) to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct PhantomArgs {
  std::string kind = "slice";
  int nx = 200;
  int ny = 221;
  double spacing_m = 7e-4;
  bool skin = false;
  bool no_cerebellum = false;
};

struct AcquisitionArgs {
  std::string mode = "partial";
  int sweeps = 50;
  int elements = 51;  // partial: arc elements; full: element count (0 = one per grid spacing)
  double offset_m = 2e-3;
  double arc_span_deg = 36.0;
};

struct WaveletArgs {
  double f0_hz = 300e3;
  double dt_s = 5e-8;
  int nt = 5001;
};

struct ImagingArgs {
  std::string background = "homogeneous";
  double smooth_sigma_cells = 3.0;
  double low_hz = 150e3;
  double high_hz = 450e3;
  bool raw_direct = false;
  bool no_balance = false;
};

struct CommonArgs {
  std::string manifest;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
};

json phantom_command(const CommonArgs& c, const PhantomArgs& p);
json simulate_command(const CommonArgs& c, const AcquisitionArgs& a, const WaveletArgs& w,
                      const SolverConfig& solver);
json migrate_command(const CommonArgs& c, const ImagingArgs& im);
json stack_command(const CommonArgs& c, const std::string& fragments,
                   const std::vector<double>& weights);

struct InvertArgs {
  std::string initial = "smoothed";
  double smooth_sigma_cells = 3.0;
  int epochs = 30;
  std::string step_rule = "backtracking";
  double initial_step = 0.01;
  bool freeze_background = true;
  int save_every = 0;
};
json invert_command(const CommonArgs& c, const InvertArgs& a);

json perturb_command(const CommonArgs& c, const std::string& fragments, const PerturbationSpec& spec);
json noise_command(const CommonArgs& c, const std::string& fragments, double sigma);
json subsample_command(const CommonArgs& c, const std::string& fragments, double keep);
json metrics_command(const CommonArgs& c, const std::string& a, const std::string& b);
json export_npy_command(const CommonArgs& c, const std::string& in);

struct DatasetArgs {
  int slices = 1;
  PhantomArgs phantom;
  AcquisitionArgs acquisition;
  WaveletArgs wavelet;
  ImagingArgs imaging;
};
json dataset_command(const CommonArgs& c, const DatasetArgs& d, const SolverConfig& solver);

}  // namespace tus::app
