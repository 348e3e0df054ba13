#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tus/acquisition.hpp"
#include "tus/phantom.hpp"

namespace tus {

struct SourceWavelet {
  std::vector<double> samples;
  double dt_s = 0.0;
  double f0_hz = 0.0;

  int nt() const { return static_cast<int>(samples.size()); }
};

/// Ricker pulse (1 - 2 pi^2 f0^2 tau^2) exp(-pi^2 f0^2 tau^2), tau = t - 1.5/f0.
SourceWavelet ricker(double f0_hz, double dt_s, int nt);

/// Frequency of the amplitude-spectrum maximum, from a zero-padded FFT with
/// parabolic refinement of the peak bin.
double dominant_frequency(std::span<const double> samples, double dt_s);

enum class BoundaryKind { Sponge, Cpml };

std::string to_string(BoundaryKind k);
BoundaryKind boundary_kind_from_string(const std::string& s);

struct SolverConfig {
  int spatial_order = 4;
  /// Absorbing cells added around the model on every side.
  int boundary_layer_cells = 20;
  BoundaryKind boundary_kind = BoundaryKind::Sponge;
  double cfl_safety = 0.9;
  /// Snapshot decimation for stored wavefields.
  int store_stride = 1;

  void validate() const;
};

struct StabilityReport {
  bool ok = false;
  double courant = 0.0;   ///< c_max dt / h
  double max_dt_s = 0.0;  ///< largest admissible dt at the configured safety
};

/// Largest admissible Courant number c dt / h for the 2D leapfrog scheme.
double stability_limit(int spatial_order);

StabilityReport check_stability(const VelocityModel& model, double dt_s, int spatial_order,
                                double cfl_safety = 0.9);

/// Traces of one shot, row-major (nt, nr).
struct ShotGather {
  int nt = 0;
  int nr = 0;
  double dt_s = 0.0;
  std::vector<double> traces;

  ShotGather() = default;
  ShotGather(int nt_, int nr_, double dt) : nt(nt_), nr(nr_), dt_s(dt) {
    traces.assign(static_cast<std::size_t>(nt_) * static_cast<std::size_t>(nr_), 0.0);
  }
  double& at(int t, int r) { return traces[static_cast<std::size_t>(t) * nr + r]; }
  double at(int t, int r) const { return traces[static_cast<std::size_t>(t) * nr + r]; }
};

/// Recorded pressure, row-major (nt, ns, nr).
struct ChannelData {
  int nt = 0;
  int ns = 0;
  int nr = 0;
  double dt_s = 0.0;
  std::vector<double> traces;

  ChannelData() = default;
  ChannelData(int nt_, int ns_, int nr_, double dt);

  double& at(int t, int s, int r) { return traces[offset(t, s, r)]; }
  double at(int t, int s, int r) const { return traces[offset(t, s, r)]; }
  std::size_t offset(int t, int s, int r) const {
    return (static_cast<std::size_t>(t) * ns + s) * nr + r;
  }

  ShotGather gather(int s) const;
  void set_gather(int s, const ShotGather& g);
};

/// Stored interior snapshots (nt_stored, nx, ny) at every store_stride-th step.
struct Wavefield {
  int nt = 0;
  int nx = 0;
  int ny = 0;
  int store_stride = 1;
  double dt_s = 0.0;
  std::vector<double> data;

  Wavefield() = default;
  Wavefield(int nt_, int nx_, int ny_, int stride, double dt);

  int nt_stored() const { return (nt + store_stride - 1) / store_stride; }
  std::span<double> snapshot(int k) {
    return {data.data() + static_cast<std::size_t>(k) * nx * ny, static_cast<std::size_t>(nx) * ny};
  }
  std::span<const double> snapshot(int k) const {
    return {data.data() + static_cast<std::size_t>(k) * nx * ny, static_cast<std::size_t>(nx) * ny};
  }
  double at(int k, int ix, int iy) const {
    return data[(static_cast<std::size_t>(k) * nx + ix) * ny + iy];
  }
};

class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(int step, int shot);
  int step() const { return step_; }
  int shot() const { return shot_; }

 private:
  int step_;
  int shot_;
};

class StabilityViolation : public std::invalid_argument {
 public:
  explicit StabilityViolation(const StabilityReport& r);
  const StabilityReport& report() const { return report_; }

 private:
  StabilityReport report_;
};

struct ForwardResult {
  ShotGather gather;
  std::optional<Wavefield> wavefield;
};

/// Leapfrog solution of the 2D acoustic wave equation for one shot. The
/// wavelet is injected at the source node, scaled by dt^2 c^2 / h^2; receivers
/// sample the pressure at their nearest node every step, and a receiver that
/// coincides with the shot's source element records zeros.
ForwardResult forward_simulate(const VelocityModel& model, const AcquisitionGeometry& geometry,
                               const Shot& shot, const SourceWavelet& wavelet,
                               const SolverConfig& config, bool store_wavefield);

/// Injects the time-reversed (nt, nr) traces at the receivers and returns the
/// resulting field indexed in forward time, so that snapshot k lines up with
/// the forward snapshot k.
Wavefield backpropagate(const VelocityModel& model, const AcquisitionGeometry& geometry,
                        const Shot& shot, const ShotGather& injected,
                        const SolverConfig& config);

/// All shots of a geometry, run concurrently; returns (nt, ns, nr) data.
ChannelData simulate_all(const VelocityModel& model, const AcquisitionGeometry& geometry,
                         const SourceWavelet& wavelet, const SolverConfig& config);

}  // namespace tus
