#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tus/acquisition.hpp"
#include "tus/grid.hpp"
#include "tus/phantom.hpp"
#include "tus/solver.hpp"

namespace tus {

struct TraFragment {
  Image image;
  int view_id = 0;
  double sweep_angle_deg = 0.0;
  std::string background_model_id;
};

struct FragmentSet {
  std::vector<TraFragment> fragments;
  std::string provenance;

  /// Throws std::invalid_argument unless all fragments share shape and
  /// background model and view ids are unique.
  void validate() const;
  std::size_t size() const { return fragments.size(); }
  bool empty() const { return fragments.empty(); }
};

struct ImagingOptions {
  /// Subtract the data the background model itself predicts, so only the
  /// scattered field is backprojected.
  bool subtract_direct = false;
  /// Scale each injected trace to unit RMS before backprojection.
  bool balance_traces = false;
};

/// Temporal source band; mapped to two-way spatial wavenumbers 2 f / c_ref.
struct Bandpass {
  double low_hz = 150e3;
  double high_hz = 450e3;
  double reference_speed_mps = 1500.0;
};

/// Zero-lag cross-correlation image of one shot:
/// I(x) = sum_n g(x, n) p(x, n), with g the source field in `background` and
/// p the backprojected recording, summed over stored snapshots.
Image tra_image(const VelocityModel& background, const ShotGather& shot_data,
                const AcquisitionGeometry& geometry, const Shot& shot,
                const SourceWavelet& wavelet, const SolverConfig& config,
                const ImagingOptions& options = {});

/// One fragment per view (shots grouped by sweep id, in order of first
/// appearance), shot images summed within a view. Fragments are raw, not yet
/// normalized.
FragmentSet migrate(const VelocityModel& background, const ChannelData& data,
                    const AcquisitionGeometry& geometry, const SourceWavelet& wavelet,
                    const SolverConfig& config, const ImagingOptions& options = {},
                    const std::string& background_model_id = "background");

/// Removes the mean, keeps the band's wavenumbers, scales to max|.| = 1.
/// Throws if the band is empty or above the grid's Nyquist wavenumber.
TraFragment normalize_fragment(const TraFragment& fragment, double spacing_m,
                               const Bandpass& band = {});

FragmentSet normalize_fragments(const FragmentSet& set, double spacing_m, const Bandpass& band = {});

/// Weighted sum of the fragments normalized to max|.| = 1 (left at zero if the
/// sum vanishes). Throws on an empty set or a weight-count mismatch.
Image stack_fragments(const FragmentSet& set,
                      const std::optional<std::vector<double>>& weights = std::nullopt);

}  // namespace tus
