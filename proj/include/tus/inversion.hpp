#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tus/acquisition.hpp"
#include "tus/grid.hpp"
#include "tus/phantom.hpp"
#include "tus/solver.hpp"

namespace tus {

/// 0.5 * sum over (time, shot, receiver) of (cal - obs)^2.
double misfit(const ChannelData& obs, const ChannelData& cal);

struct GradientResult {
  /// d(misfit)/d(c) on the model grid, per (m/s).
  Image gradient;
  double misfit = 0.0;
};

/// Adjoint-state gradient of the waveform misfit with respect to velocity.
/// Exact for the discrete sponge-bounded scheme; cells where `freeze_mask`
/// is nonzero get a zero gradient.
GradientResult fwi_gradient(const VelocityModel& model, const ChannelData& obs,
                            const AcquisitionGeometry& geometry, const SourceWavelet& wavelet,
                            const SolverConfig& config,
                            const std::optional<Mask>& freeze_mask = std::nullopt);

/// Misfit of a model against observed data (one forward solve per shot).
double compute_misfit(const VelocityModel& model, const ChannelData& obs,
                      const AcquisitionGeometry& geometry, const SourceWavelet& wavelet,
                      const SolverConfig& config);

enum class StepRule { Fixed, Backtracking };

std::string to_string(StepRule r);
StepRule step_rule_from_string(const std::string& s);

struct FwiConfig {
  int epochs = 30;
  StepRule step_rule = StepRule::Backtracking;
  /// First trial update has infinity norm initial_step * max(c).
  double initial_step = 0.01;
  int max_halvings = 20;
  double armijo_c1 = 1e-4;
  std::optional<Mask> freeze_mask;

  void validate() const;
};

struct FwiResult {
  VelocityModel model;
  /// Misfit at the start of every completed epoch, then the final misfit.
  std::vector<double> misfit_history;
  int epochs_run = 0;
  bool stopped_early = false;
  std::string stop_reason;
};

/// Called after every epoch with the epoch number (1-based) and current model.
using EpochCallback = std::function<void(int epoch, const VelocityModel& model, double misfit)>;

/// Steepest descent on velocity with values clamped to the admissible range.
FwiResult fwi_invert(const VelocityModel& model0, const ChannelData& obs,
                     const AcquisitionGeometry& geometry, const SourceWavelet& wavelet,
                     const SolverConfig& config, const FwiConfig& fwi,
                     const EpochCallback& on_epoch = {});

}  // namespace tus
