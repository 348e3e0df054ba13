#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tus/grid.hpp"

namespace tus {

enum class TissueClass : std::uint8_t {
  Background = 0,
  Skin = 1,
  Skull = 2,
  CsFluid = 3,
  GrayMatter = 4,
  WhiteMatter = 5,
  Ventricles = 6,
  Cerebellum = 7,
};

inline constexpr int kTissueClassCount = 8;

std::string to_string(TissueClass c);
/// Parses the lower-case names produced by to_string; throws on unknown names.
TissueClass tissue_class_from_string(const std::string& name);
bool is_valid_tissue_label(int value);

/// Speed of sound per tissue class, in m/s.
class VelocityTable {
 public:
  /// Brain-phantom speeds; Background is the coupling medium.
  static VelocityTable brain(double background_mps = 1500.0);

  double operator()(TissueClass c) const { return speeds_[static_cast<std::size_t>(c)]; }
  void set(TissueClass c, double mps) { speeds_[static_cast<std::size_t>(c)] = mps; }

 private:
  std::array<double, kTissueClassCount> speeds_{};
};

struct TissueMap {
  Array2D<TissueClass> labels;
  double spacing_m = 0.0;

  int nx() const { return labels.nx(); }
  int ny() const { return labels.ny(); }
};

struct VelocityModel {
  Image values;
  double spacing_m = 0.0;
  std::array<double, 2> origin_m{0.0, 0.0};

  int nx() const { return values.nx(); }
  int ny() const { return values.ny(); }
  double max_speed() const;
  double min_speed() const;
  /// Throws std::invalid_argument unless every value is finite and in
  /// [kMinSpeed, kMaxSpeed] and spacing is positive.
  void validate() const;

  static constexpr double kMinSpeed = 1000.0;
  static constexpr double kMaxSpeed = 6000.0;
};

VelocityModel constant_model(int nx, int ny, double spacing_m, double speed_mps);

struct PhantomSpec {
  int nx = 200;
  int ny = 221;
  double spacing_m = 7e-4;
  std::uint64_t seed = 0;
  /// Aspect ratios (minor/major) for skull, CSF, gray matter, white matter and
  /// ventricle boundaries. Empty means drawn from the seed.
  std::vector<double> layer_eccentricities;
  bool skin = false;
  bool cerebellum = true;
  /// Clearance kept between the head and the grid edge, for the transducers.
  double clearance_m = 3e-3;
};

/// Nested star-shaped layers around a common centre: skull, subarachnoid CSF,
/// cortical gray matter, white matter, ventricles; optional skin ring and a
/// posterior cerebellum pocket carved out of the CSF layer.
TissueMap build_slice_phantom(const PhantomSpec& spec);

/// Skull shell around CSF with an off-centre white-matter core. Used as the
/// small FWI test medium.
TissueMap build_two_layer_phantom(int nx, int ny, double spacing_m, std::uint64_t seed);

VelocityModel rasterize(const TissueMap& map, const VelocityTable& lut);

/// True for labels strictly inside the skull (soft tissue and fluids).
bool is_intracranial(TissueClass c);

VelocityModel homogeneous_interior(const VelocityModel& model, const TissueMap& map,
                                   double c0 = 1500.0);

/// Gaussian blur, standard deviation in grid cells, half-sample mirror padding.
VelocityModel smooth_model(const VelocityModel& model, double sigma_cells);

/// Gaussian blur restricted to intracranial cells (normalised convolution over
/// the intracranial mask); skull and exterior keep their values.
VelocityModel smooth_interior(const VelocityModel& model, const TissueMap& map,
                              double sigma_cells);

/// 1 on cells that carry `target` and touch a different label (4-neighbourhood),
/// or, with target unset, on every cell touching a different label.
Image interface_image(const TissueMap& map, std::optional<TissueClass> target = std::nullopt);

}  // namespace tus
