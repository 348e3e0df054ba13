#include "tus/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "propagator.hpp"
#include "tus/filters.hpp"
#include "tus/parallel.hpp"

namespace tus {

void FragmentSet::validate() const {
  std::set<int> ids;
  for (const auto& f : fragments) {
    if (!ids.insert(f.view_id).second) {
      throw std::invalid_argument("fragment set: duplicate view id " + std::to_string(f.view_id));
    }
    if (!f.image.same_shape(fragments.front().image)) {
      throw std::invalid_argument("fragment set: fragments differ in shape");
    }
    if (f.background_model_id != fragments.front().background_model_id) {
      throw std::invalid_argument("fragment set: fragments use different background models");
    }
  }
}

Image tra_image(const VelocityModel& background, const ShotGather& shot_data,
                const AcquisitionGeometry& geometry, const Shot& shot,
                const SourceWavelet& wavelet, const SolverConfig& config,
                const ImagingOptions& options) {
  detail::check_inputs(background, geometry, shot, wavelet.dt_s, config);
  const int nt = wavelet.nt();
  const int nr = static_cast<int>(shot.receiver_elements.size());
  if (shot_data.nt != nt || shot_data.nr != nr) {
    throw std::invalid_argument("tra_image: recorded traces do not match the wavelet and shot");
  }
  for (double v : shot_data.traces) {
    if (!std::isfinite(v)) throw std::invalid_argument("tra_image: recorded traces are not finite");
  }
  detail::Propagator prop(background, wavelet.dt_s, config);
  Wavefield source_field(nt, background.nx(), background.ny(), config.store_stride, wavelet.dt_s);
  const int stride = config.store_stride;
  const ShotGather direct =
      detail::forward_stream(prop, geometry, shot, wavelet, [&](int n, const std::vector<double>& f) {
        if (n % stride == 0) detail::copy_interior(prop, f, source_field.snapshot(n / stride));
      });

  ShotGather injected = shot_data;
  if (options.subtract_direct) {
    for (std::size_t i = 0; i < injected.traces.size(); ++i) injected.traces[i] -= direct.traces[i];
  }
  if (options.balance_traces) {
    for (int r = 0; r < nr; ++r) {
      double ss = 0.0;
      for (int t = 0; t < nt; ++t) ss += injected.at(t, r) * injected.at(t, r);
      const double rms = std::sqrt(ss / nt);
      if (rms > 0.0) {
        for (int t = 0; t < nt; ++t) injected.at(t, r) /= rms;
      }
    }
  }

  Image image(background.nx(), background.ny(), 0.0);
  const int nx = background.nx();
  const int ny = background.ny();
  detail::backward_stream(prop, geometry, shot, injected, [&](int n, const std::vector<double>& p) {
    if (n % stride != 0) return;
    const auto g = source_field.snapshot(n / stride);
    for (int ix = 0; ix < nx; ++ix) {
      const double* pr = p.data() + prop.node(ix, 0);
      const double* gr = g.data() + static_cast<std::size_t>(ix) * ny;
      for (int iy = 0; iy < ny; ++iy) image(ix, iy) += stride * gr[iy] * pr[iy];
    }
  });
  return image;
}

FragmentSet migrate(const VelocityModel& background, const ChannelData& data,
                    const AcquisitionGeometry& geometry, const SourceWavelet& wavelet,
                    const SolverConfig& config, const ImagingOptions& options,
                    const std::string& background_model_id) {
  geometry.validate();
  const int ns = static_cast<int>(geometry.shots.size());
  if (data.ns != ns || data.nr != geometry.receivers_per_shot() || data.nt != wavelet.nt()) {
    throw std::invalid_argument("migrate: channel data do not match geometry and wavelet");
  }
  std::vector<Image> shot_images(static_cast<std::size_t>(ns));
  parallel_for(ns, [&](int s) {
    shot_images[static_cast<std::size_t>(s)] =
        tra_image(background, data.gather(s), geometry, geometry.shots[static_cast<std::size_t>(s)],
                  wavelet, config, options);
  });

  FragmentSet set;
  std::map<int, std::size_t> slot;
  for (int s = 0; s < ns; ++s) {
    const Shot& shot = geometry.shots[static_cast<std::size_t>(s)];
    auto it = slot.find(shot.sweep_id);
    if (it == slot.end()) {
      TraFragment f;
      f.image = Image(background.nx(), background.ny(), 0.0);
      f.view_id = shot.sweep_id;
      f.sweep_angle_deg = shot.angle_deg;
      f.background_model_id = background_model_id;
      it = slot.emplace(shot.sweep_id, set.fragments.size()).first;
      set.fragments.push_back(std::move(f));
    }
    auto& img = set.fragments[it->second].image;
    const auto& add = shot_images[static_cast<std::size_t>(s)];
    for (std::size_t i = 0; i < img.size(); ++i) img.values()[i] += add.values()[i];
  }
  return set;
}

TraFragment normalize_fragment(const TraFragment& fragment, double spacing_m, const Bandpass& band) {
  if (!(band.low_hz >= 0.0) || !(band.low_hz < band.high_hz) || !(band.reference_speed_mps > 0.0)) {
    throw std::invalid_argument("normalize_fragment: need 0 <= low < high and a positive speed");
  }
  if (!(spacing_m > 0.0)) throw std::invalid_argument("normalize_fragment: spacing must be > 0");
  const double k_low = 2.0 * band.low_hz / band.reference_speed_mps;
  const double k_high = 2.0 * band.high_hz / band.reference_speed_mps;
  if (k_high > 0.5 / spacing_m) {
    throw std::invalid_argument("normalize_fragment: band exceeds the grid's Nyquist wavenumber");
  }
  TraFragment out = fragment;
  Image& img = out.image;
  if (img.empty()) return out;
  double mean = 0.0;
  for (double v : img.values()) mean += v;
  mean /= static_cast<double>(img.size());
  for (double& v : img.values()) v -= mean;
  img = bandpass_wavenumber(img, spacing_m, k_low, k_high);
  double peak = 0.0;
  for (double v : img.values()) peak = std::max(peak, std::abs(v));
  // anything at round-off level of the input counts as an empty fragment
  double in_peak = 0.0;
  for (double v : fragment.image.values()) in_peak = std::max(in_peak, std::abs(v));
  if (peak <= 1e-12 * in_peak || peak == 0.0) {
    img.fill(0.0);
    return out;
  }
  for (double& v : img.values()) v /= peak;
  return out;
}

FragmentSet normalize_fragments(const FragmentSet& set, double spacing_m, const Bandpass& band) {
  FragmentSet out;
  out.provenance = set.provenance;
  out.fragments.reserve(set.size());
  for (const auto& f : set.fragments) out.fragments.push_back(normalize_fragment(f, spacing_m, band));
  return out;
}

Image stack_fragments(const FragmentSet& set, const std::optional<std::vector<double>>& weights) {
  if (set.empty()) throw std::invalid_argument("stack_fragments: empty fragment set");
  set.validate();
  if (weights && weights->size() != set.size()) {
    throw std::invalid_argument("stack_fragments: one weight per fragment required");
  }
  const auto& first = set.fragments.front().image;
  Image out(first.nx(), first.ny(), 0.0);
  for (std::size_t k = 0; k < set.size(); ++k) {
    const double w = weights ? (*weights)[k] : 1.0;
    const auto& img = set.fragments[k].image;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += w * img.values()[i];
  }
  double peak = 0.0;
  for (double v : out.values()) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : out.values()) v /= peak;
  }
  return out;
}

}  // namespace tus
