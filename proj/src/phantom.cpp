#include "tus/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "tus/filters.hpp"

namespace tus {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinLayerCells = 2.5;

const char* const kClassNames[kTissueClassCount] = {
    "background", "skin", "skull", "csf", "gray_matter", "white_matter", "ventricles", "cerebellum"};

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  double operator()(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

 private:
  std::mt19937_64 rng_;
};

double ellipse_radius(double ax, double ay, double theta) {
  const double c = std::cos(theta) / ax;
  const double s = std::sin(theta) / ay;
  return 1.0 / std::sqrt(c * c + s * s);
}

double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

// Polar description of the nested slice; every radius is in cells, measured
// from (cx, cy) along direction theta.
struct SliceLayout {
  double cx = 0.0, cy = 0.0;
  // Mean radius and x/y aspect of each boundary: head, skull inner, CSF inner,
  // gray matter inner, ventricles.
  std::array<double, 5> rho{};
  std::array<double, 5> aspect{};
  double head_wobble_amp = 0.0, head_wobble_phase = 0.0;
  double fold_amp = 0.0, fold_phase = 0.0;
  int fold_order = 8;
  double skin_cells = 0.0;
  bool cerebellum = false;
  double pocket_angle = kPi / 2.0;
  double pocket_depth = 0.0;
  double pocket_halfwidth = kPi / 4.0;

  double ellipse(int i, double theta) const {
    const double ax = rho[i] * std::sqrt(aspect[i]);
    const double ay = rho[i] / std::sqrt(aspect[i]);
    return ellipse_radius(ax, ay, theta);
  }

  double pocket(double theta) const {
    if (!cerebellum) return 0.0;
    const double d = std::abs(wrap_angle(theta - pocket_angle));
    if (d >= pocket_halfwidth) return 0.0;
    return pocket_depth * 0.5 * (1.0 + std::cos(kPi * d / pocket_halfwidth));
  }

  // Boundaries ordered outer to inner; each at least kMinLayerCells inside the
  // previous one along the ray.
  std::array<double, 5> radii(double theta) const {
    std::array<double, 5> r{};
    r[0] = ellipse(0, theta) * (1.0 + head_wobble_amp * std::cos(3.0 * theta + head_wobble_phase));
    r[1] = std::min(ellipse(1, theta), r[0] - kMinLayerCells);
    r[2] = std::min(ellipse(2, theta) - pocket(theta), r[1] - kMinLayerCells);
    r[3] = std::min(ellipse(3, theta) * (1.0 + fold_amp * std::sin(fold_order * theta + fold_phase)),
                    r[2] - kMinLayerCells);
    r[4] = std::min(ellipse(4, theta), r[3] - kMinLayerCells);
    return r;
  }
};

void require_grid(int nx, int ny, double spacing_m) {
  if (nx < 32 || ny < 32) {
    throw std::invalid_argument("phantom: grid must be at least 32x32, got " +
                                std::to_string(nx) + "x" + std::to_string(ny));
  }
  if (!(spacing_m > 0.0) || !std::isfinite(spacing_m)) {
    throw std::invalid_argument("phantom: spacing must be positive");
  }
}

}  // namespace

std::string to_string(TissueClass c) {
  const int v = static_cast<int>(c);
  if (!is_valid_tissue_label(v)) return "invalid";
  return kClassNames[v];
}

TissueClass tissue_class_from_string(const std::string& name) {
  for (int i = 0; i < kTissueClassCount; ++i) {
    if (name == kClassNames[i]) return static_cast<TissueClass>(i);
  }
  throw std::invalid_argument("unknown tissue class '" + name + "'");
}

bool is_valid_tissue_label(int value) { return value >= 0 && value < kTissueClassCount; }

VelocityTable VelocityTable::brain(double background_mps) {
  VelocityTable t;
  t.set(TissueClass::Background, background_mps);
  t.set(TissueClass::Skin, 1700.0);
  t.set(TissueClass::Skull, 3000.0);
  t.set(TissueClass::CsFluid, 1550.0);
  t.set(TissueClass::GrayMatter, 1500.0);
  t.set(TissueClass::WhiteMatter, 1480.0);
  t.set(TissueClass::Ventricles, 1510.0);
  t.set(TissueClass::Cerebellum, 1520.0);
  return t;
}

double VelocityModel::max_speed() const {
  const auto v = values.values();
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double VelocityModel::min_speed() const {
  const auto v = values.values();
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

void VelocityModel::validate() const {
  if (values.empty()) throw std::invalid_argument("velocity model is empty");
  if (!(spacing_m > 0.0) || !std::isfinite(spacing_m)) {
    throw std::invalid_argument("velocity model spacing must be positive");
  }
  for (double v : values.values()) {
    if (!std::isfinite(v) || v < kMinSpeed || v > kMaxSpeed) {
      throw std::invalid_argument("velocity model value " + std::to_string(v) +
                                  " outside [1000, 6000] m/s");
    }
  }
}

VelocityModel constant_model(int nx, int ny, double spacing_m, double speed_mps) {
  VelocityModel m;
  m.values = Image(nx, ny, speed_mps);
  m.spacing_m = spacing_m;
  return m;
}

TissueMap build_slice_phantom(const PhantomSpec& spec) {
  require_grid(spec.nx, spec.ny, spec.spacing_m);
  if (!spec.layer_eccentricities.empty() && spec.layer_eccentricities.size() != 5) {
    throw std::invalid_argument("phantom: layer_eccentricities needs 5 entries");
  }
  for (double e : spec.layer_eccentricities) {
    if (!(e >= 0.5 && e <= 2.0)) {
      throw std::invalid_argument("phantom: layer eccentricity must lie in [0.5, 2]");
    }
  }

  Uniform rnd(spec.seed);
  SliceLayout L;
  L.cx = 0.5 * (spec.nx - 1) + rnd(-1.0, 1.0);
  L.cy = 0.5 * (spec.ny - 1) + rnd(-1.0, 1.0);
  L.cerebellum = spec.cerebellum;

  const double clearance = spec.clearance_m / spec.spacing_m + 1.0;
  const double half_x = std::min(L.cx, spec.nx - 1 - L.cx) - clearance;
  const double half_y = std::min(L.cy, spec.ny - 1 - L.cy) - clearance;

  // Head outline: y is the anterior-posterior axis.
  for (int i = 0; i < 5; ++i) {
    L.aspect[i] = spec.layer_eccentricities.empty() ? rnd(0.82, 0.95)
                                                    : spec.layer_eccentricities[i];
  }
  L.head_wobble_amp = rnd(0.0, 0.02);
  L.head_wobble_phase = rnd(0.0, 2.0 * kPi);

  const double skin_frac = spec.skin ? 0.03 : 0.0;
  // Largest mean radius whose ellipse (plus wobble and skin) fits the box.
  const double ax_unit = std::sqrt(L.aspect[0]);
  const double ay_unit = 1.0 / std::sqrt(L.aspect[0]);
  const double grow = (1.0 + L.head_wobble_amp) * (1.0 + skin_frac);
  double rho0 = std::min(half_x / (ax_unit * grow), half_y / (ay_unit * grow));
  rho0 -= spec.skin ? 2.0 : 0.0;
  rho0 *= rnd(0.9, 0.98);

  const double t_skull = std::max(kMinLayerCells, rnd(0.08, 0.11) * rho0);
  const double t_csf = std::max(kMinLayerCells, rnd(0.04, 0.06) * rho0);
  const double t_gray = std::max(kMinLayerCells, rnd(0.08, 0.11) * rho0);
  L.rho[0] = rho0;
  L.rho[1] = rho0 - t_skull;
  L.rho[2] = L.rho[1] - t_csf;
  L.rho[3] = L.rho[2] - t_gray;
  L.rho[4] = rnd(0.2, 0.28) * L.rho[3];
  L.skin_cells = spec.skin ? std::max(kMinLayerCells, skin_frac * rho0) : 0.0;

  L.fold_order = rnd.integer(7, 12);
  L.fold_amp = rnd(0.03, 0.06);
  L.fold_phase = rnd(0.0, 2.0 * kPi);

  L.pocket_angle = kPi / 2.0 + rnd(-0.15, 0.15);
  L.pocket_depth = std::max(4.0, rnd(0.18, 0.24) * L.rho[2]);
  L.pocket_halfwidth = rnd(0.6, 0.8);

  // Every boundary must stay at least kMinLayerCells deep on every ray, and
  // the ventricles need a core of the same size.
  double min_core = 1e300;
  for (int k = 0; k < 720; ++k) {
    const double th = 2.0 * kPi * k / 720.0;
    min_core = std::min(min_core, L.radii(th)[4]);
  }
  if (rho0 < 5.0 * kMinLayerCells || min_core < kMinLayerCells) {
    throw std::invalid_argument(
        "phantom: grid " + std::to_string(spec.nx) + "x" + std::to_string(spec.ny) +
        " at spacing " + std::to_string(spec.spacing_m) +
        " m is too small for five nested layers of at least 2 cells");
  }

  // Cerebellum ellipse sits inside the posterior CSF pocket.
  const auto rp = L.radii(L.pocket_angle);
  const double pocket_mid = 0.5 * (rp[1] + rp[2]);
  const double cb_radial = 0.5 * (rp[1] - rp[2]) - 1.5;
  const double cb_tangent = pocket_mid * std::sin(0.6 * L.pocket_halfwidth);
  const bool with_cerebellum = L.cerebellum && cb_radial >= 1.0;
  const double cb_x = L.cx + pocket_mid * std::cos(L.pocket_angle);
  const double cb_y = L.cy + pocket_mid * std::sin(L.pocket_angle);

  TissueMap map;
  map.spacing_m = spec.spacing_m;
  map.labels = Array2D<TissueClass>(spec.nx, spec.ny, TissueClass::Background);
  for (int ix = 0; ix < spec.nx; ++ix) {
    for (int iy = 0; iy < spec.ny; ++iy) {
      const double dx = ix - L.cx;
      const double dy = iy - L.cy;
      const double r = std::hypot(dx, dy);
      const double th = std::atan2(dy, dx);
      const auto R = L.radii(th);
      TissueClass c = TissueClass::Background;
      if (r < R[4]) {
        c = TissueClass::Ventricles;
      } else if (r < R[3]) {
        c = TissueClass::WhiteMatter;
      } else if (r < R[2]) {
        c = TissueClass::GrayMatter;
      } else if (r < R[1]) {
        c = TissueClass::CsFluid;
        if (with_cerebellum && r > R[2] + 1.0 && r < R[1] - 1.0) {
          // Ellipse axes aligned with the radial and tangential directions.
          const double ux = std::cos(L.pocket_angle), uy = std::sin(L.pocket_angle);
          const double px = ix - cb_x, py = iy - cb_y;
          const double radial = px * ux + py * uy;
          const double tangent = -px * uy + py * ux;
          const double q = (radial * radial) / (cb_radial * cb_radial) +
                           (tangent * tangent) / (cb_tangent * cb_tangent);
          if (q < 1.0) c = TissueClass::Cerebellum;
        }
      } else if (r < R[0]) {
        c = TissueClass::Skull;
      } else if (spec.skin && r < R[0] + L.skin_cells) {
        c = TissueClass::Skin;
      }
      map.labels(ix, iy) = c;
    }
  }
  return map;
}

TissueMap build_two_layer_phantom(int nx, int ny, double spacing_m, std::uint64_t seed) {
  require_grid(nx, ny, spacing_m);
  Uniform rnd(seed);
  const double cx = 0.5 * (nx - 1);
  const double cy = 0.5 * (ny - 1);
  const double clearance = 3e-3 / spacing_m + 1.0;
  const double ax = (cx - clearance) * rnd(0.88, 0.95);
  const double ay = (cy - clearance) * rnd(0.88, 0.95);
  const double t_skull = std::max(kMinLayerCells, 0.1 * std::min(ax, ay));
  const double bx = ax - t_skull;
  const double by = ay - t_skull;
  if (std::min(bx, by) < 4.0 * kMinLayerCells) {
    throw std::invalid_argument("two-layer phantom: grid too small");
  }
  // Off-centre core, kept kMinLayerCells away from the skull.
  const double kx = bx * rnd(0.4, 0.55);
  const double ky = by * rnd(0.4, 0.55);
  const double ox = rnd(-1.0, 1.0) * std::max(0.0, bx - kx - 2.0 * kMinLayerCells) * 0.6;
  const double oy = rnd(-1.0, 1.0) * std::max(0.0, by - ky - 2.0 * kMinLayerCells) * 0.6;

  TissueMap map;
  map.spacing_m = spacing_m;
  map.labels = Array2D<TissueClass>(nx, ny, TissueClass::Background);
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      const double dx = ix - cx, dy = iy - cy;
      const double outer = (dx * dx) / (ax * ax) + (dy * dy) / (ay * ay);
      const double inner = (dx * dx) / (bx * bx) + (dy * dy) / (by * by);
      const double ex = dx - ox, ey = dy - oy;
      const double core = (ex * ex) / (kx * kx) + (ey * ey) / (ky * ky);
      TissueClass c = TissueClass::Background;
      if (core < 1.0) {
        c = TissueClass::WhiteMatter;
      } else if (inner < 1.0) {
        c = TissueClass::CsFluid;
      } else if (outer < 1.0) {
        c = TissueClass::Skull;
      }
      map.labels(ix, iy) = c;
    }
  }
  return map;
}

VelocityModel rasterize(const TissueMap& map, const VelocityTable& lut) {
  VelocityModel m;
  m.spacing_m = map.spacing_m;
  m.values = Image(map.nx(), map.ny());
  const auto labels = map.labels.values();
  auto out = m.values.values();
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = lut(labels[i]);
  return m;
}

bool is_intracranial(TissueClass c) {
  switch (c) {
    case TissueClass::CsFluid:
    case TissueClass::GrayMatter:
    case TissueClass::WhiteMatter:
    case TissueClass::Ventricles:
    case TissueClass::Cerebellum:
      return true;
    default:
      return false;
  }
}

VelocityModel homogeneous_interior(const VelocityModel& model, const TissueMap& map, double c0) {
  require_same_shape(model.values, map.labels, "homogeneous_interior");
  VelocityModel out = model;
  const auto labels = map.labels.values();
  auto v = out.values.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (is_intracranial(labels[i])) v[i] = c0;
  }
  return out;
}

VelocityModel smooth_model(const VelocityModel& model, double sigma_cells) {
  if (!(sigma_cells >= 0.0)) throw std::invalid_argument("smooth_model: sigma must be >= 0");
  VelocityModel out = model;
  if (sigma_cells == 0.0) return out;
  out.values = gaussian_blur(model.values, sigma_cells);
  return out;
}

VelocityModel smooth_interior(const VelocityModel& model, const TissueMap& map,
                              double sigma_cells) {
  require_same_shape(model.values, map.labels, "smooth_interior");
  if (!(sigma_cells >= 0.0)) throw std::invalid_argument("smooth_interior: sigma must be >= 0");
  VelocityModel out = model;
  if (sigma_cells == 0.0) return out;
  Image weighted(model.nx(), model.ny());
  Image mask(model.nx(), model.ny());
  for (int ix = 0; ix < model.nx(); ++ix) {
    for (int iy = 0; iy < model.ny(); ++iy) {
      if (is_intracranial(map.labels(ix, iy))) {
        mask(ix, iy) = 1.0;
        weighted(ix, iy) = model.values(ix, iy);
      }
    }
  }
  const Image num = gaussian_blur(weighted, sigma_cells);
  const Image den = gaussian_blur(mask, sigma_cells);
  for (int ix = 0; ix < model.nx(); ++ix) {
    for (int iy = 0; iy < model.ny(); ++iy) {
      if (mask(ix, iy) > 0.0) out.values(ix, iy) = num(ix, iy) / den(ix, iy);
    }
  }
  return out;
}

Image interface_image(const TissueMap& map, std::optional<TissueClass> target) {
  Image out(map.nx(), map.ny());
  const auto& lab = map.labels;
  for (int ix = 0; ix < map.nx(); ++ix) {
    for (int iy = 0; iy < map.ny(); ++iy) {
      const TissueClass c = lab(ix, iy);
      if (target && c != *target) continue;
      const int nb[4][2] = {{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}};
      for (const auto& n : nb) {
        if (lab.contains(n[0], n[1]) && lab(n[0], n[1]) != c) {
          out(ix, iy) = 1.0;
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace tus
