#pragma once

// Time-stepping kernel shared by modelling, imaging and inversion.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "tus/solver.hpp"

namespace tus::detail {

/// Second-order-in-time leapfrog on the model grid extended by an absorbing
/// layer and a zero halo. In the interior the update is
///   u+ = 2u - u- + (c dt / h)^2 lap(u) + (c dt / h)^2 src
/// and inside the sponge it solves u_tt + eta u_t = c^2 lap(u).
class Propagator {
 public:
  static constexpr int kHalo = 2;

  Propagator(const VelocityModel& model, double dt_s, const SolverConfig& config);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int model_nx() const { return mnx_; }
  int model_ny() const { return mny_; }
  int offset() const { return off_; }
  std::size_t cells() const { return static_cast<std::size_t>(nx_) * ny_; }

  /// Flat index of model cell (ix, iy).
  std::size_t node(int ix, int iy) const {
    return static_cast<std::size_t>(ix + off_) * ny_ + static_cast<std::size_t>(iy + off_);
  }
  /// Flat index of the nearest node to an element; throws if the element lies
  /// outside the model grid.
  std::size_t element_node(const Point2& p) const;

  /// Model cell a padded cell copies its velocity from (edge extension), or
  /// {-1, -1} for halo cells.
  std::pair<int, int> source_cell(int px, int py) const;

  const std::vector<double>& eta() const { return eta_; }
  double speed(std::size_t i) const { return speed_[i]; }
  BoundaryKind boundary() const { return kind_; }
  bool in_stencil_region(int px, int py) const {
    return px >= kHalo && py >= kHalo && px < nx_ - kHalo && py < ny_ - kHalo;
  }

  void reset();
  /// next <- stencil(current, previous); returns the sum of the new field.
  double advance();
  void add_source(std::size_t i, double amplitude) { next_[i] += inject_[i] * amplitude; }
  void rotate() {
    std::swap(prev_, cur_);
    std::swap(cur_, next_);
    if (kind_ == BoundaryKind::Cpml) {
      std::swap(psi_x_, psi_x_next_);
      std::swap(psi_y_, psi_y_next_);
    }
  }
  const std::vector<double>& current() const { return cur_; }
  const std::vector<double>& previous() const { return prev_; }

  /// Steps n = 0 .. nt-1. observe(n, field) sees u^n; inject(n, *this) adds
  /// sources into u^{n+1}.
  template <class Inject, class Observe>
  void run(int nt, int shot_id, Inject&& inject, Observe&& observe) {
    reset();
    for (int n = 0; n < nt; ++n) {
      observe(n, cur_);
      if (n + 1 == nt) break;
      const double sum = advance();
      if (!std::isfinite(sum)) throw InstabilityError(n + 1, shot_id);
      inject(n, *this);
      rotate();
    }
  }

 private:
  double advance_sponge();
  double advance_cpml();

  BoundaryKind kind_;
  int order_;
  int pad_;
  int off_;
  int mnx_, mny_;
  int nx_, ny_;
  double dt_;
  double h_;
  std::array<double, 2> origin_;
  std::vector<double> speed_;
  std::vector<double> w_;       // (c dt / h)^2
  std::vector<double> e_;       // 1 / (1 + eta dt / 2)
  std::vector<double> a_;       // 1 - eta dt / 2
  std::vector<double> eta_;     // sponge damping, 1/s
  std::vector<double> inject_;  // source scaling per cell
  std::vector<double> sigma_x_, sigma_y_;
  std::vector<double> prev_, cur_, next_;
  std::vector<double> psi_x_, psi_y_, psi_x_next_, psi_y_next_;
};

/// Called with the step index in forward time and the padded field.
using StepObserver = std::function<void(int n, const std::vector<double>& field)>;

/// Validates model, config, geometry, shot and stability for a run at dt_s.
void check_inputs(const VelocityModel& model, const AcquisitionGeometry& geometry,
                  const Shot& shot, double dt_s, const SolverConfig& config);

/// Index of `shot` within the geometry (for error reports).
int shot_index(const AcquisitionGeometry& geometry, const Shot& shot);

/// Forward run from the shot's source; observe sees u^n for n = 0 .. nt-1.
ShotGather forward_stream(Propagator& prop, const AcquisitionGeometry& geometry, const Shot& shot,
                          const SourceWavelet& wavelet, const StepObserver& observe);

/// Backpropagation of (nt, nr) traces; observe sees the adjoint field p^n
/// for n = nt-1 down to 0.
void backward_stream(Propagator& prop, const AcquisitionGeometry& geometry, const Shot& shot,
                     const ShotGather& traces, const StepObserver& observe);

/// Copies the model-grid part of a padded field.
void copy_interior(const Propagator& prop, const std::vector<double>& field, std::span<double> dst);

}  // namespace tus::detail
