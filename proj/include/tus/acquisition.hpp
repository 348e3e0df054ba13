#pragma once

#include <array>
#include <vector>

#include "tus/phantom.hpp"

namespace tus {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Element {
  Point2 position_m;
  int index = 0;
};

struct Shot {
  int source_element = 0;
  std::vector<int> receiver_elements;
  int sweep_id = 0;
  /// Polar angle (degrees, counter-clockwise from +x about the head centre)
  /// of the sweep centre, or of the source for full-aperture shots.
  double angle_deg = 0.0;
};

enum class AcquisitionMode { Full, Partial };

struct AcquisitionGeometry {
  std::vector<Element> elements;
  std::vector<Shot> shots;
  AcquisitionMode mode = AcquisitionMode::Full;

  /// Throws std::invalid_argument on dangling element indices, ragged receiver
  /// counts or (partial mode) a source listed among its own receivers.
  void validate() const;
  int receivers_per_shot() const;
};

/// Default element pitch along the contour for the full-aperture array.
inline constexpr double kDefaultElementSpacing = 1e-3;

struct ContourOptions {
  /// Distance of the transducer contour outside the head outline.
  double offset_m = 2e-3;
};

/// Closed polyline (metres, counter-clockwise, first point not repeated).
using Contour = std::vector<Point2>;

/// Outer boundary of the head (every non-background label) by marching
/// squares at the 0.5 level of the head mask. Throws if the head touches the
/// grid edge (open contour) or there is no head.
Contour head_contour(const TissueMap& map);

/// Moves every vertex `distance_m` along its outward normal.
Contour offset_contour(const Contour& c, double distance_m);

double contour_length(const Contour& c);
Point2 contour_centroid(const Contour& c);

/// Elements at uniform arc length (close to `element_spacing_m`) around the
/// offset head contour; element i fires shot i and every element records.
/// `n_views` > 0 groups consecutive shots into that many sweep ids.
AcquisitionGeometry full_contour_geometry(const TissueMap& map, double element_spacing_m,
                                          const ContourOptions& opts = {}, int n_views = 0);

/// As above with an exact element count.
AcquisitionGeometry full_contour_geometry_count(const TissueMap& map, int n_elements,
                                                const ContourOptions& opts = {},
                                                int n_views = 0);

struct ArcOptions {
  ContourOptions contour;
  /// Angular extent of one placement of the array, seen from the head centre.
  double arc_span_deg = 36.0;
};

/// Rotating conformal arc: sweep k is centred at k*360/n_sweeps degrees, the
/// centre element transmits and the other n_elements-1 receive.
AcquisitionGeometry partial_arc_geometry(const TissueMap& map, int n_sweeps = 50,
                                         int n_elements = 51, const ArcOptions& opts = {});

/// Circle of `n_elements` transducers, each firing once, all recording.
AcquisitionGeometry ring_geometry(Point2 centre_m, double radius_m, int n_elements);

/// Nearest grid node to `p` for a model with the given spacing and origin.
std::array<int, 2> nearest_node(const Point2& p, double spacing_m,
                                const std::array<double, 2>& origin_m = {0.0, 0.0});

}  // namespace tus
