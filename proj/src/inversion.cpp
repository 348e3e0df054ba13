#include "tus/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "propagator.hpp"
#include "tus/parallel.hpp"

namespace tus {

namespace {

void require_congruent(const ChannelData& a, const ChannelData& b) {
  if (a.nt != b.nt || a.ns != b.ns || a.nr != b.nr || a.traces.size() != b.traces.size()) {
    throw std::invalid_argument("misfit: channel data shapes differ");
  }
  if (a.dt_s != b.dt_s) throw std::invalid_argument("misfit: channel data time steps differ");
}

void require_matches(const ChannelData& obs, const AcquisitionGeometry& geometry,
                     const SourceWavelet& wavelet) {
  if (obs.ns != static_cast<int>(geometry.shots.size()) || obs.nr != geometry.receivers_per_shot() ||
      obs.nt != wavelet.nt() || obs.dt_s != wavelet.dt_s) {
    throw std::invalid_argument("observed data do not match the geometry and wavelet");
  }
}

struct ShotGradient {
  Image grad_m;  // d misfit / d (1/c^2)
  double misfit = 0.0;
};

ShotGradient shot_gradient(const VelocityModel& model, const ShotGather& obs,
                           const AcquisitionGeometry& geometry, const Shot& shot,
                           const SourceWavelet& wavelet, const SolverConfig& config) {
  detail::check_inputs(model, geometry, shot, wavelet.dt_s, config);
  if (config.boundary_kind != BoundaryKind::Sponge) {
    throw std::invalid_argument("fwi_gradient supports the sponge boundary only");
  }
  detail::Propagator prop(model, wavelet.dt_s, config);
  const int nt = wavelet.nt();
  const std::size_t cells = prop.cells();
  std::vector<double> u(static_cast<std::size_t>(nt) * cells);
  ShotGather cal = detail::forward_stream(prop, geometry, shot, wavelet,
                                          [&](int n, const std::vector<double>& f) {
                                            std::copy(f.begin(), f.end(), u.begin() + n * cells);
                                          });
  ShotGradient out;
  ShotGather residual = cal;
  for (std::size_t i = 0; i < residual.traces.size(); ++i) {
    residual.traces[i] -= obs.traces[i];
  }
  for (int r = 0; r < residual.nr; ++r) {
    if (shot.receiver_elements[static_cast<std::size_t>(r)] == shot.source_element) continue;
    for (int t = 0; t < nt; ++t) out.misfit += 0.5 * residual.at(t, r) * residual.at(t, r);
  }

  const double dt = wavelet.dt_s;
  const double h2 = model.spacing_m * model.spacing_m;
  const double ck = h2 / (dt * dt);
  const double cs = h2 / (2.0 * dt);
  const auto& eta = prop.eta();
  std::vector<double> g(cells, 0.0);
  std::vector<double> p_next(cells, 0.0);  // p^{n+1}; zero at n = nt-1
  const int pnx = prop.nx();
  const int pny = prop.ny();
  const int halo = detail::Propagator::kHalo;
  detail::backward_stream(prop, geometry, shot, residual, [&](int n, const std::vector<double>& p) {
    if (n + 1 < nt) {
      const double* u0 = u.data() + static_cast<std::size_t>(n) * cells;
      const double* u1 = u0 + cells;
      const double* um = n > 0 ? u0 - cells : nullptr;
      for (int px = halo; px < pnx - halo; ++px) {
        for (int py = halo; py < pny - halo; ++py) {
          const std::size_t i = static_cast<std::size_t>(px) * pny + py;
          double v = ck * (p_next[i] - p[i]) * (u1[i] - u0[i]);
          if (eta[i] != 0.0) v -= cs * eta[i] * p[i] * (u1[i] - (um ? um[i] : 0.0));
          g[i] += v;
        }
      }
    }
    p_next = p;
  });

  out.grad_m = Image(model.nx(), model.ny(), 0.0);
  for (int px = 0; px < pnx; ++px) {
    for (int py = 0; py < pny; ++py) {
      const auto [ix, iy] = prop.source_cell(px, py);
      if (ix < 0) continue;
      out.grad_m(ix, iy) += g[static_cast<std::size_t>(px) * pny + py];
    }
  }
  return out;
}

}  // namespace

double misfit(const ChannelData& obs, const ChannelData& cal) {
  require_congruent(obs, cal);
  double s = 0.0;
  for (std::size_t i = 0; i < obs.traces.size(); ++i) {
    const double d = cal.traces[i] - obs.traces[i];
    s += d * d;
  }
  return 0.5 * s;
}

GradientResult fwi_gradient(const VelocityModel& model, const ChannelData& obs,
                            const AcquisitionGeometry& geometry, const SourceWavelet& wavelet,
                            const SolverConfig& config, const std::optional<Mask>& freeze_mask) {
  model.validate();
  geometry.validate();
  require_matches(obs, geometry, wavelet);
  if (freeze_mask) require_same_shape(*freeze_mask, model.values, "freeze mask");
  const int ns = static_cast<int>(geometry.shots.size());
  std::vector<ShotGradient> parts(static_cast<std::size_t>(ns));
  parallel_for(ns, [&](int s) {
    parts[static_cast<std::size_t>(s)] =
        shot_gradient(model, obs.gather(s), geometry, geometry.shots[static_cast<std::size_t>(s)],
                      wavelet, config);
  });
  GradientResult out;
  out.gradient = Image(model.nx(), model.ny(), 0.0);
  for (const auto& part : parts) {
    out.misfit += part.misfit;
    for (std::size_t i = 0; i < out.gradient.size(); ++i) {
      out.gradient.values()[i] += part.grad_m.values()[i];
    }
  }
  for (std::size_t i = 0; i < out.gradient.size(); ++i) {
    const double c = model.values.values()[i];
    out.gradient.values()[i] *= -2.0 / (c * c * c);
    if (freeze_mask && freeze_mask->values()[i]) out.gradient.values()[i] = 0.0;
  }
  return out;
}

double compute_misfit(const VelocityModel& model, const ChannelData& obs,
                      const AcquisitionGeometry& geometry, const SourceWavelet& wavelet,
                      const SolverConfig& config) {
  require_matches(obs, geometry, wavelet);
  const ChannelData cal = simulate_all(model, geometry, wavelet, config);
  ChannelData masked = obs;
  // the source's own trace is never recorded
  for (int s = 0; s < obs.ns; ++s) {
    const Shot& shot = geometry.shots[static_cast<std::size_t>(s)];
    for (int r = 0; r < obs.nr; ++r) {
      if (shot.receiver_elements[static_cast<std::size_t>(r)] != shot.source_element) continue;
      for (int t = 0; t < obs.nt; ++t) masked.at(t, s, r) = 0.0;
    }
  }
  return misfit(masked, cal);
}

std::string to_string(StepRule r) { return r == StepRule::Fixed ? "fixed" : "backtracking"; }

StepRule step_rule_from_string(const std::string& s) {
  if (s == "fixed") return StepRule::Fixed;
  if (s == "backtracking") return StepRule::Backtracking;
  throw std::invalid_argument("unknown step rule: " + s);
}

void FwiConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(initial_step > 0.0 && initial_step <= 0.1)) {
    throw std::invalid_argument("initial_step must be in (0, 0.1]");
  }
  if (max_halvings < 0) throw std::invalid_argument("max_halvings must be >= 0");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw std::invalid_argument("armijo_c1 must be in (0, 1)");
}

FwiResult fwi_invert(const VelocityModel& model0, const ChannelData& obs,
                     const AcquisitionGeometry& geometry, const SourceWavelet& wavelet,
                     const SolverConfig& config, const FwiConfig& fwi,
                     const EpochCallback& on_epoch) {
  fwi.validate();
  model0.validate();
  FwiResult result;
  result.model = model0;
  VelocityModel& m = result.model;
  std::optional<double> known_misfit;
  for (int epoch = 1; epoch <= fwi.epochs; ++epoch) {
    const auto gr = fwi_gradient(m, obs, geometry, wavelet, config, fwi.freeze_mask);
    const double zeta = known_misfit.value_or(gr.misfit);
    result.misfit_history.push_back(zeta);
    double gmax = 0.0;
    for (double v : gr.gradient.values()) gmax = std::max(gmax, std::abs(v));
    if (zeta == 0.0 || gmax == 0.0) {
      result.stopped_early = true;
      result.stop_reason = zeta == 0.0 ? "misfit is zero" : "gradient is zero";
      known_misfit = zeta;
      break;
    }
    double alpha = fwi.initial_step * m.max_speed() / gmax;
    auto trial_model = [&](double a) {
      VelocityModel t = m;
      for (std::size_t i = 0; i < t.values.size(); ++i) {
        t.values.values()[i] = std::clamp(t.values.values()[i] - a * gr.gradient.values()[i],
                                          VelocityModel::kMinSpeed, VelocityModel::kMaxSpeed);
      }
      return t;
    };
    if (fwi.step_rule == StepRule::Fixed) {
      m = trial_model(alpha);
      known_misfit.reset();
    } else {
      bool accepted = false;
      for (int k = 0; k <= fwi.max_halvings; ++k, alpha *= 0.5) {
        VelocityModel t = trial_model(alpha);
        if (!check_stability(t, wavelet.dt_s, config.spatial_order, config.cfl_safety).ok) continue;
        double decrease = 0.0;  // <g, t - m>, negative for a descent step
        for (std::size_t i = 0; i < t.values.size(); ++i) {
          decrease += gr.gradient.values()[i] * (t.values.values()[i] - m.values.values()[i]);
        }
        const double z = compute_misfit(t, obs, geometry, wavelet, config);
        if (z <= zeta + fwi.armijo_c1 * decrease) {
          m = std::move(t);
          known_misfit = z;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        result.stopped_early = true;
        result.stop_reason = "no descent after " + std::to_string(fwi.max_halvings) + " halvings";
        known_misfit = zeta;
        break;
      }
    }
    result.epochs_run = epoch;
    if (on_epoch) on_epoch(epoch, m, known_misfit.value_or(zeta));
  }
  result.misfit_history.push_back(known_misfit ? *known_misfit
                                               : compute_misfit(m, obs, geometry, wavelet, config));
  return result;
}

}  // namespace tus
