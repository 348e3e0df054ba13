#include "tus/solver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <sstream>

#include "propagator.hpp"
#include "tus/parallel.hpp"

namespace tus {

namespace {

// Raised-cosine sponge: eta_max = kSpongeStrength * c_ref / (B h), so the
// two-way amplitude loss across the layer is roughly exp(-kSpongeStrength)
// for waves at c_ref. c_ref is fixed (water) so that the damping does not
// depend on the model being inverted.
constexpr double kSpongeStrength = 8.0;
constexpr double kSpongeReferenceSpeed = 1500.0;
constexpr double kCpmlReflection = 1e-3;

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

std::string format_report(const StabilityReport& r) {
  std::ostringstream os;
  os << "time step violates the stability limit (Courant number " << r.courant
     << "); largest admissible dt is " << r.max_dt_s << " s";
  return os.str();
}

}  // namespace

SourceWavelet ricker(double f0_hz, double dt_s, int nt) {
  if (!(f0_hz > 0.0) || !(dt_s > 0.0)) {
    throw std::invalid_argument("ricker: frequency and time step must be positive");
  }
  if (f0_hz * dt_s >= 0.5) throw std::invalid_argument("ricker: frequency above Nyquist");
  if (static_cast<double>(nt) < 4.0 / (f0_hz * dt_s)) {
    throw std::invalid_argument("ricker: nt too short to contain the wavelet");
  }
  SourceWavelet w;
  w.dt_s = dt_s;
  w.f0_hz = f0_hz;
  w.samples.resize(static_cast<std::size_t>(nt));
  const double t0 = 1.5 / f0_hz;
  const double pf2 = std::numbers::pi * std::numbers::pi * f0_hz * f0_hz;
  for (int n = 0; n < nt; ++n) {
    const double tau = n * dt_s - t0;
    const double a = pf2 * tau * tau;
    w.samples[static_cast<std::size_t>(n)] = (1.0 - 2.0 * a) * std::exp(-a);
  }
  return w;
}

double dominant_frequency(std::span<const double> samples, double dt_s) {
  if (samples.empty() || !(dt_s > 0.0)) {
    throw std::invalid_argument("dominant_frequency: empty signal or bad dt");
  }
  std::size_t n = 1;
  while (n < 16 * samples.size()) n <<= 1;
  std::vector<double> in(n, 0.0);
  std::copy(samples.begin(), samples.end(), in.begin());
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }
  std::size_t k = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = std::abs(out[i]);
    if (m > best) {
      best = m;
      k = i;
    }
  }
  double shift = 0.0;
  if (k > 0 && k + 1 < out.size()) {
    const double a = std::abs(out[k - 1]);
    const double c = std::abs(out[k + 1]);
    const double denom = a - 2.0 * best + c;
    if (denom != 0.0) shift = 0.5 * (a - c) / denom;
  }
  return (static_cast<double>(k) + shift) / (static_cast<double>(n) * dt_s);
}

std::string to_string(BoundaryKind k) { return k == BoundaryKind::Sponge ? "sponge" : "cpml"; }

BoundaryKind boundary_kind_from_string(const std::string& s) {
  if (s == "sponge") return BoundaryKind::Sponge;
  if (s == "cpml") return BoundaryKind::Cpml;
  throw std::invalid_argument("unknown boundary kind: " + s);
}

void SolverConfig::validate() const {
  if (spatial_order != 2 && spatial_order != 4) {
    throw std::invalid_argument("spatial_order must be 2 or 4");
  }
  if (boundary_layer_cells < 10) throw std::invalid_argument("boundary_layer_cells must be >= 10");
  if (!(cfl_safety > 0.0 && cfl_safety <= 0.9)) {
    throw std::invalid_argument("cfl_safety must be in (0, 0.9]");
  }
  if (store_stride < 1) throw std::invalid_argument("store_stride must be >= 1");
}

double stability_limit(int spatial_order) {
  if (spatial_order == 2) return 1.0 / std::sqrt(2.0);
  if (spatial_order == 4) return std::sqrt(3.0 / 8.0);
  throw std::invalid_argument("spatial_order must be 2 or 4");
}

StabilityReport check_stability(const VelocityModel& model, double dt_s, int spatial_order,
                                double cfl_safety) {
  StabilityReport r;
  const double cmax = model.max_speed();
  r.courant = cmax * dt_s / model.spacing_m;
  r.max_dt_s = cfl_safety * stability_limit(spatial_order) * model.spacing_m / cmax;
  r.ok = dt_s > 0.0 && dt_s <= r.max_dt_s;
  return r;
}

ChannelData::ChannelData(int nt_, int ns_, int nr_, double dt)
    : nt(nt_), ns(ns_), nr(nr_), dt_s(dt) {
  traces.assign(static_cast<std::size_t>(nt_) * ns_ * nr_, 0.0);
}

ShotGather ChannelData::gather(int s) const {
  ShotGather g(nt, nr, dt_s);
  for (int t = 0; t < nt; ++t) {
    for (int r = 0; r < nr; ++r) g.at(t, r) = at(t, s, r);
  }
  return g;
}

void ChannelData::set_gather(int s, const ShotGather& g) {
  if (g.nt != nt || g.nr != nr) throw std::invalid_argument("set_gather: shape mismatch");
  for (int t = 0; t < nt; ++t) {
    for (int r = 0; r < nr; ++r) at(t, s, r) = g.at(t, r);
  }
}

Wavefield::Wavefield(int nt_, int nx_, int ny_, int stride, double dt)
    : nt(nt_), nx(nx_), ny(ny_), store_stride(stride), dt_s(dt) {
  data.assign(static_cast<std::size_t>(nt_stored()) * nx_ * ny_, 0.0);
}

InstabilityError::InstabilityError(int step, int shot)
    : std::runtime_error("wavefield became non-finite at time step " + std::to_string(step) +
                         " of shot " + std::to_string(shot)),
      step_(step),
      shot_(shot) {}

StabilityViolation::StabilityViolation(const StabilityReport& r)
    : std::invalid_argument(format_report(r)), report_(r) {}

namespace detail {

Propagator::Propagator(const VelocityModel& model, double dt_s, const SolverConfig& config)
    : kind_(config.boundary_kind),
      order_(config.spatial_order),
      pad_(config.boundary_layer_cells),
      off_(config.boundary_layer_cells + kHalo),
      mnx_(model.nx()),
      mny_(model.ny()),
      nx_(model.nx() + 2 * off_),
      ny_(model.ny() + 2 * off_),
      dt_(dt_s),
      h_(model.spacing_m),
      origin_(model.origin_m) {
  const std::size_t n = cells();
  speed_.assign(n, 0.0);
  w_.assign(n, 0.0);
  e_.assign(n, 1.0);
  a_.assign(n, 1.0);
  eta_.assign(n, 0.0);
  inject_.assign(n, 0.0);
  const double cmax = model.max_speed();
  const double eta_max = kSpongeStrength * kSpongeReferenceSpeed / (pad_ * h_);
  const double sigma_max = 3.0 * cmax * std::log(1.0 / kCpmlReflection) / (2.0 * pad_ * h_);
  auto depth = [&](int p, int m) {
    const int i = p - off_;
    const int d = std::max({0, -i, i - (m - 1)});
    return std::min(1.0, static_cast<double>(d) / pad_);
  };
  if (kind_ == BoundaryKind::Cpml) {
    sigma_x_.assign(n, 0.0);
    sigma_y_.assign(n, 0.0);
  }
  for (int px = 0; px < nx_; ++px) {
    const int ix = std::clamp(px - off_, 0, mnx_ - 1);
    const double dx = depth(px, mnx_);
    for (int py = 0; py < ny_; ++py) {
      const int iy = std::clamp(py - off_, 0, mny_ - 1);
      const double dy = depth(py, mny_);
      const std::size_t i = static_cast<std::size_t>(px) * ny_ + py;
      const double c = model.values(ix, iy);
      speed_[i] = c;
      w_[i] = c * c * dt_ * dt_ / (h_ * h_);
      if (kind_ == BoundaryKind::Sponge) {
        const double eta = 0.5 * eta_max * ((1.0 - std::cos(std::numbers::pi * dx)) +
                                            (1.0 - std::cos(std::numbers::pi * dy)));
        eta_[i] = eta;
        const double g = 0.5 * eta * dt_;
        e_[i] = 1.0 / (1.0 + g);
        a_[i] = 1.0 - g;
        inject_[i] = e_[i] * w_[i];
      } else {
        sigma_x_[i] = sigma_max * dx * dx;
        sigma_y_[i] = sigma_max * dy * dy;
        inject_[i] = w_[i] / (1.0 + 0.5 * dt_ * (sigma_x_[i] + sigma_y_[i]));
      }
    }
  }
  prev_.assign(n, 0.0);
  cur_.assign(n, 0.0);
  next_.assign(n, 0.0);
  if (kind_ == BoundaryKind::Cpml) {
    psi_x_.assign(n, 0.0);
    psi_y_.assign(n, 0.0);
    psi_x_next_.assign(n, 0.0);
    psi_y_next_.assign(n, 0.0);
  }
}

std::size_t Propagator::element_node(const Point2& p) const {
  const auto ij = nearest_node(p, h_, origin_);
  if (ij[0] < 0 || ij[1] < 0 || ij[0] >= mnx_ || ij[1] >= mny_) {
    throw std::invalid_argument("transducer element lies outside the model grid");
  }
  return node(ij[0], ij[1]);
}

std::pair<int, int> Propagator::source_cell(int px, int py) const {
  if (!in_stencil_region(px, py)) return {-1, -1};
  return {std::clamp(px - off_, 0, mnx_ - 1), std::clamp(py - off_, 0, mny_ - 1)};
}

void Propagator::reset() {
  std::fill(prev_.begin(), prev_.end(), 0.0);
  std::fill(cur_.begin(), cur_.end(), 0.0);
  std::fill(next_.begin(), next_.end(), 0.0);
  if (kind_ == BoundaryKind::Cpml) {
    std::fill(psi_x_.begin(), psi_x_.end(), 0.0);
    std::fill(psi_y_.begin(), psi_y_.end(), 0.0);
    std::fill(psi_x_next_.begin(), psi_x_next_.end(), 0.0);
    std::fill(psi_y_next_.begin(), psi_y_next_.end(), 0.0);
  }
}

double Propagator::advance() {
  return kind_ == BoundaryKind::Sponge ? advance_sponge() : advance_cpml();
}

double Propagator::advance_sponge() {
  const double* u = cur_.data();
  const double* um = prev_.data();
  double* un = next_.data();
  const std::size_t s = static_cast<std::size_t>(ny_);
  double sum = 0.0;
  for (int px = kHalo; px < nx_ - kHalo; ++px) {
    const std::size_t row = static_cast<std::size_t>(px) * s;
    if (order_ == 4) {
      for (int py = kHalo; py < ny_ - kHalo; ++py) {
        const std::size_t i = row + py;
        const double lap = -5.0 * u[i] +
                           (4.0 / 3.0) * (u[i - 1] + u[i + 1] + u[i - s] + u[i + s]) -
                           (1.0 / 12.0) * (u[i - 2] + u[i + 2] + u[i - 2 * s] + u[i + 2 * s]);
        un[i] = e_[i] * (2.0 * u[i] - a_[i] * um[i] + w_[i] * lap);
        sum += un[i];
      }
    } else {
      for (int py = kHalo; py < ny_ - kHalo; ++py) {
        const std::size_t i = row + py;
        const double lap = u[i - 1] + u[i + 1] + u[i - s] + u[i + s] - 4.0 * u[i];
        un[i] = e_[i] * (2.0 * u[i] - a_[i] * um[i] + w_[i] * lap);
        sum += un[i];
      }
    }
  }
  return sum;
}

double Propagator::advance_cpml() {
  const double* u = cur_.data();
  const double* um = prev_.data();
  double* un = next_.data();
  const double* qx = psi_x_.data();
  const double* qy = psi_y_.data();
  double* qxn = psi_x_next_.data();
  double* qyn = psi_y_next_.data();
  const std::size_t s = static_cast<std::size_t>(ny_);
  const bool o4 = order_ == 4;
  auto d1 = [o4](const double* f, std::size_t i, std::size_t step) {
    if (o4) {
      return (2.0 / 3.0) * (f[i + step] - f[i - step]) -
             (1.0 / 12.0) * (f[i + 2 * step] - f[i - 2 * step]);
    }
    return 0.5 * (f[i + step] - f[i - step]);
  };
  double sum = 0.0;
  for (int px = kHalo; px < nx_ - kHalo; ++px) {
    for (int py = kHalo; py < ny_ - kHalo; ++py) {
      const std::size_t i = static_cast<std::size_t>(px) * s + py;
      double lap;
      if (o4) {
        lap = -5.0 * u[i] + (4.0 / 3.0) * (u[i - 1] + u[i + 1] + u[i - s] + u[i + s]) -
              (1.0 / 12.0) * (u[i - 2] + u[i + 2] + u[i - 2 * s] + u[i + 2 * s]);
      } else {
        lap = u[i - 1] + u[i + 1] + u[i - s] + u[i + s] - 4.0 * u[i];
      }
      const double sx = sigma_x_[i];
      const double sy = sigma_y_[i];
      const double sp = 0.5 * dt_ * (sx + sy);
      // psi vanishes outside the layer but cells next to it still see it
      const double extra = d1(qx, i, s) + d1(qy, i, 1);
      if (sx != 0.0 || sy != 0.0) {
        qxn[i] = qx[i] - dt_ * (sx * qx[i] + (sx - sy) * d1(u, i, s));
        qyn[i] = qy[i] - dt_ * (sy * qy[i] + (sy - sx) * d1(u, i, 1));
      } else {
        qxn[i] = 0.0;
        qyn[i] = 0.0;
      }
      un[i] = (w_[i] * (lap + extra) + sp * um[i] + 2.0 * u[i] - um[i] -
               dt_ * dt_ * sx * sy * u[i]) /
              (1.0 + sp);
      sum += un[i];
    }
  }
  return sum;
}

}  // namespace detail

namespace detail {

void check_inputs(const VelocityModel& model, const AcquisitionGeometry& geometry,
                  const Shot& shot, double dt_s, const SolverConfig& config) {
  model.validate();
  config.validate();
  geometry.validate();
  const auto report = check_stability(model, dt_s, config.spatial_order, config.cfl_safety);
  if (!report.ok) throw StabilityViolation(report);
  const int ne = static_cast<int>(geometry.elements.size());
  if (shot.source_element < 0 || shot.source_element >= ne) {
    throw std::invalid_argument("shot source element out of range");
  }
  for (int r : shot.receiver_elements) {
    if (r < 0 || r >= ne) throw std::invalid_argument("shot receiver element out of range");
  }
}

int shot_index(const AcquisitionGeometry& geometry, const Shot& shot) {
  for (std::size_t i = 0; i < geometry.shots.size(); ++i) {
    if (&geometry.shots[i] == &shot) return static_cast<int>(i);
  }
  return shot.source_element;
}

void copy_interior(const Propagator& p, const std::vector<double>& field, std::span<double> dst) {
  const int nx = p.model_nx();
  const int ny = p.model_ny();
  for (int ix = 0; ix < nx; ++ix) {
    const double* src = field.data() + p.node(ix, 0);
    std::copy(src, src + ny, dst.begin() + static_cast<std::ptrdiff_t>(ix) * ny);
  }
}

ShotGather forward_stream(Propagator& prop, const AcquisitionGeometry& geometry, const Shot& shot,
                          const SourceWavelet& wavelet, const StepObserver& observe) {
  const int nt = wavelet.nt();
  if (nt < 1) throw std::invalid_argument("forward simulation needs a non-empty wavelet");
  const std::size_t src = prop.element_node(geometry.elements[shot.source_element].position_m);
  const int nr = static_cast<int>(shot.receiver_elements.size());
  std::vector<std::size_t> rec;
  std::vector<int> rid;
  for (int r = 0; r < nr; ++r) {
    const int e = shot.receiver_elements[static_cast<std::size_t>(r)];
    if (e == shot.source_element) continue;
    rec.push_back(prop.element_node(geometry.elements[e].position_m));
    rid.push_back(r);
  }
  ShotGather gather(nt, nr, wavelet.dt_s);
  prop.run(
      nt, shot_index(geometry, shot),
      [&](int n, Propagator& p) { p.add_source(src, wavelet.samples[static_cast<std::size_t>(n)]); },
      [&](int n, const std::vector<double>& field) {
        for (std::size_t k = 0; k < rec.size(); ++k) gather.at(n, rid[k]) = field[rec[k]];
        if (observe) observe(n, field);
      });
  return gather;
}

void backward_stream(Propagator& prop, const AcquisitionGeometry& geometry, const Shot& shot,
                     const ShotGather& traces, const StepObserver& observe) {
  const int nt = traces.nt;
  const int nr = static_cast<int>(shot.receiver_elements.size());
  if (traces.nr != nr || traces.traces.size() != static_cast<std::size_t>(nt) * nr) {
    throw std::invalid_argument("backpropagation traces must be shaped (nt, nr) for this shot");
  }
  if (nt < 1) throw std::invalid_argument("backpropagation needs non-empty traces");
  std::vector<std::size_t> rec;
  std::vector<int> rid;
  for (int r = 0; r < nr; ++r) {
    const int e = shot.receiver_elements[static_cast<std::size_t>(r)];
    if (e == shot.source_element) continue;
    rec.push_back(prop.element_node(geometry.elements[e].position_m));
    rid.push_back(r);
  }
  prop.run(
      nt, shot_index(geometry, shot),
      [&](int j, Propagator& p) {
        const int t = nt - 1 - j;
        for (std::size_t k = 0; k < rec.size(); ++k) p.add_source(rec[k], traces.at(t, rid[k]));
      },
      [&](int j, const std::vector<double>& field) {
        if (observe) observe(nt - 1 - j, field);
      });
}

}  // namespace detail

ForwardResult forward_simulate(const VelocityModel& model, const AcquisitionGeometry& geometry,
                               const Shot& shot, const SourceWavelet& wavelet,
                               const SolverConfig& config, bool store_wavefield) {
  detail::check_inputs(model, geometry, shot, wavelet.dt_s, config);
  detail::Propagator prop(model, wavelet.dt_s, config);
  ForwardResult result;
  detail::StepObserver observe;
  if (store_wavefield) {
    result.wavefield.emplace(wavelet.nt(), model.nx(), model.ny(), config.store_stride, wavelet.dt_s);
    auto& wf = *result.wavefield;
    observe = [&](int n, const std::vector<double>& field) {
      if (n % wf.store_stride == 0) detail::copy_interior(prop, field, wf.snapshot(n / wf.store_stride));
    };
  }
  result.gather = detail::forward_stream(prop, geometry, shot, wavelet, observe);
  return result;
}

Wavefield backpropagate(const VelocityModel& model, const AcquisitionGeometry& geometry,
                        const Shot& shot, const ShotGather& injected,
                        const SolverConfig& config) {
  detail::check_inputs(model, geometry, shot, injected.dt_s, config);
  detail::Propagator prop(model, injected.dt_s, config);
  Wavefield wf(injected.nt, model.nx(), model.ny(), config.store_stride, injected.dt_s);
  detail::backward_stream(prop, geometry, shot, injected, [&](int n, const std::vector<double>& field) {
    if (n % wf.store_stride == 0) detail::copy_interior(prop, field, wf.snapshot(n / wf.store_stride));
  });
  return wf;
}

ChannelData simulate_all(const VelocityModel& model, const AcquisitionGeometry& geometry,
                         const SourceWavelet& wavelet, const SolverConfig& config) {
  geometry.validate();
  const int ns = static_cast<int>(geometry.shots.size());
  const int nr = geometry.receivers_per_shot();
  ChannelData data(wavelet.nt(), ns, nr, wavelet.dt_s);
  parallel_for(ns, [&](int s) {
    const auto res = forward_simulate(model, geometry, geometry.shots[static_cast<std::size_t>(s)],
                                      wavelet, config, false);
    data.set_gather(s, res.gather);
  });
  return data;
}

}  // namespace tus
