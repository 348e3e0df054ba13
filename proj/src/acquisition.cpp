#include "tus/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace tus {

namespace {

constexpr double kPi = std::numbers::pi;

double deg_to_rad(double d) { return d * kPi / 180.0; }

double polar_angle_deg(const Point2& p, const Point2& c) {
  double a = std::atan2(p.y - c.y, p.x - c.x) * 180.0 / kPi;
  if (a < 0.0) a += 360.0;
  return a;
}

double signed_area(const Contour& c) {
  double a = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& p = c[i];
    const auto& q = c[(i + 1) % c.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

// Arc-length parametrisation of a closed polyline.
class ArcLength {
 public:
  explicit ArcLength(const Contour& c) : c_(c), cum_(c.size() + 1, 0.0) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& p = c[i];
      const auto& q = c[(i + 1) % c.size()];
      cum_[i + 1] = cum_[i] + std::hypot(q.x - p.x, q.y - p.y);
    }
  }

  double length() const { return cum_.back(); }

  Point2 at(double s) const {
    const double L = length();
    s = std::fmod(s, L);
    if (s < 0.0) s += L;
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    std::size_t i = static_cast<std::size_t>(std::distance(cum_.begin(), it)) - 1;
    i = std::min(i, c_.size() - 1);
    const double seg = cum_[i + 1] - cum_[i];
    const double t = seg > 0.0 ? (s - cum_[i]) / seg : 0.0;
    const auto& p = c_[i];
    const auto& q = c_[(i + 1) % c_.size()];
    return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
  }

  // Arc position where the ray from `centre` at angle `theta` (radians) meets
  // the contour; the contour must be star-shaped about `centre`.
  double at_angle(const Point2& centre, double theta) const {
    const double dx = std::cos(theta), dy = std::sin(theta);
    double best_s = 0.0;
    double best_t = -1.0;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      const auto& p = c_[i];
      const auto& q = c_[(i + 1) % c_.size()];
      // Solve centre + t*d = p + u*(q-p).
      const double ex = q.x - p.x, ey = q.y - p.y;
      const double den = dx * ey - dy * ex;
      if (std::abs(den) < 1e-300) continue;
      const double wx = p.x - centre.x, wy = p.y - centre.y;
      const double t = (wx * ey - wy * ex) / den;
      const double u = (wx * dy - wy * dx) / den;
      if (t > 0.0 && u >= 0.0 && u <= 1.0 && t > best_t) {
        best_t = t;
        best_s = cum_[i] + u * (cum_[i + 1] - cum_[i]);
      }
    }
    if (best_t < 0.0) throw std::invalid_argument("contour is not star-shaped about its centre");
    return best_s;
  }

 private:
  const Contour& c_;
  std::vector<double> cum_;
};

void require_inside(const AcquisitionGeometry& g, const TissueMap& map) {
  const double xmax = (map.nx() - 1) * map.spacing_m;
  const double ymax = (map.ny() - 1) * map.spacing_m;
  for (const auto& e : g.elements) {
    const auto& p = e.position_m;
    if (!(p.x > 0.0 && p.y > 0.0 && p.x < xmax && p.y < ymax)) {
      throw std::invalid_argument("element " + std::to_string(e.index) +
                                  " falls outside the model grid; reduce the contour offset");
    }
    const auto n = nearest_node(p, map.spacing_m);
    const TissueClass c = map.labels(n[0], n[1]);
    if (c == TissueClass::Skull || is_intracranial(c)) {
      throw std::invalid_argument("element " + std::to_string(e.index) +
                                  " lies on the skull or inside the head");
    }
  }
}

AcquisitionGeometry every_element_fires(std::vector<Element> elements, const Point2& centre,
                                        int n_views) {
  AcquisitionGeometry g;
  g.mode = AcquisitionMode::Full;
  g.elements = std::move(elements);
  const int n = static_cast<int>(g.elements.size());
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < n; ++i) {
    Shot s;
    s.source_element = i;
    s.receiver_elements = all;
    s.sweep_id = n_views > 0 ? static_cast<int>(static_cast<long long>(i) * n_views / n) : i;
    s.angle_deg = polar_angle_deg(g.elements[static_cast<std::size_t>(i)].position_m, centre);
    g.shots.push_back(std::move(s));
  }
  return g;
}

}  // namespace

void AcquisitionGeometry::validate() const {
  const int n = static_cast<int>(elements.size());
  for (int i = 0; i < n; ++i) {
    if (elements[static_cast<std::size_t>(i)].index != i) {
      throw std::invalid_argument("geometry: element indices must be 0..N-1 in order");
    }
  }
  std::size_t nr = shots.empty() ? 0 : shots.front().receiver_elements.size();
  for (const auto& s : shots) {
    if (s.source_element < 0 || s.source_element >= n) {
      throw std::invalid_argument("geometry: shot source index out of range");
    }
    if (s.receiver_elements.size() != nr) {
      throw std::invalid_argument("geometry: every shot needs the same receiver count");
    }
    for (int r : s.receiver_elements) {
      if (r < 0 || r >= n) throw std::invalid_argument("geometry: receiver index out of range");
      if (mode == AcquisitionMode::Partial && r == s.source_element) {
        throw std::invalid_argument("geometry: partial-mode source listed as its own receiver");
      }
    }
  }
}

int AcquisitionGeometry::receivers_per_shot() const {
  return shots.empty() ? 0 : static_cast<int>(shots.front().receiver_elements.size());
}

std::array<int, 2> nearest_node(const Point2& p, double spacing_m,
                                const std::array<double, 2>& origin_m) {
  return {static_cast<int>(std::lround((p.x - origin_m[0]) / spacing_m)),
          static_cast<int>(std::lround((p.y - origin_m[1]) / spacing_m))};
}

Contour head_contour(const TissueMap& map) {
  const int nx = map.nx(), ny = map.ny();
  auto inside = [&](int ix, int iy) {
    if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return false;
    return map.labels(ix, iy) != TissueClass::Background;
  };
  bool any = false;
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      if (!inside(ix, iy)) continue;
      any = true;
      if (ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1) {
        throw std::invalid_argument("head contour is open: the head touches the grid edge");
      }
    }
  }
  if (!any) throw std::invalid_argument("head contour: map has no head");

  // Edge midpoints in half-cell integer units; key = (2x, 2y).
  using Key = std::pair<int, int>;
  std::map<Key, std::vector<Key>> links;
  auto link = [&](Key a, Key b) {
    links[a].push_back(b);
    links[b].push_back(a);
  };
  for (int ix = -1; ix < nx; ++ix) {
    for (int iy = -1; iy < ny; ++iy) {
      const bool v00 = inside(ix, iy), v10 = inside(ix + 1, iy);
      const bool v11 = inside(ix + 1, iy + 1), v01 = inside(ix, iy + 1);
      const int code = (v00 ? 1 : 0) | (v10 ? 2 : 0) | (v11 ? 4 : 0) | (v01 ? 8 : 0);
      if (code == 0 || code == 15) continue;
      const Key bottom{2 * ix + 1, 2 * iy};
      const Key right{2 * ix + 2, 2 * iy + 1};
      const Key top{2 * ix + 1, 2 * iy + 2};
      const Key left{2 * ix, 2 * iy + 1};
      switch (code) {
        case 1: case 14: link(left, bottom); break;
        case 2: case 13: link(bottom, right); break;
        case 3: case 12: link(left, right); break;
        case 4: case 11: link(right, top); break;
        case 6: case 9: link(bottom, top); break;
        case 7: case 8: link(left, top); break;
        // Saddles: keep diagonal inside corners apart (4-connectivity).
        case 5: link(left, bottom); link(right, top); break;
        case 10: link(bottom, right); link(left, top); break;
        default: break;
      }
    }
  }

  std::map<Key, bool> visited;
  Contour best;
  double best_area = 0.0;
  for (const auto& [start, _] : links) {
    if (visited[start]) continue;
    std::vector<Key> loop;
    Key prev = start, cur = start;
    bool closed = false;
    while (true) {
      visited[cur] = true;
      loop.push_back(cur);
      const auto& nb = links[cur];
      Key next = nb[0] == prev && nb.size() > 1 ? nb[1] : nb[0];
      if (loop.size() == 1) next = nb[0];
      if (next == start) {
        closed = true;
        break;
      }
      if (visited[next]) break;
      prev = cur;
      cur = next;
    }
    if (!closed) continue;
    Contour c;
    c.reserve(loop.size());
    for (const auto& k : loop) c.push_back({0.5 * k.first * map.spacing_m, 0.5 * k.second * map.spacing_m});
    const double a = signed_area(c);
    if (std::abs(a) > best_area) {
      best_area = std::abs(a);
      if (a < 0.0) std::reverse(c.begin(), c.end());
      best = std::move(c);
    }
  }
  if (best.size() < 4) throw std::invalid_argument("head contour: no closed outline found");
  // Two passes of a 5-point circular average remove the marching-squares
  // staircase, which otherwise inflates the arc length by a few percent.
  const std::size_t n = best.size();
  for (int pass = 0; pass < 2 && n >= 8; ++pass) {
    const Contour src = best;
    for (std::size_t i = 0; i < n; ++i) {
      double x = 0.0, y = 0.0;
      for (std::size_t d = 0; d < 5; ++d) {
        const auto& p = src[(i + n + d - 2) % n];
        x += p.x;
        y += p.y;
      }
      best[i] = {x / 5.0, y / 5.0};
    }
  }
  return best;
}

Contour offset_contour(const Contour& c, double distance_m) {
  const std::size_t n = c.size();
  // Normals from a wide central difference smooth out the marching-squares
  // staircase.
  const std::size_t k = std::min<std::size_t>(3, n / 4 == 0 ? 1 : n / 4);
  Contour out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = c[(i + n - k) % n];
    const auto& b = c[(i + k) % n];
    const double tx = b.x - a.x, ty = b.y - a.y;
    const double len = std::hypot(tx, ty);
    const double nx = len > 0.0 ? ty / len : 0.0;
    const double ny = len > 0.0 ? -tx / len : 0.0;
    out[i] = {c[i].x + distance_m * nx, c[i].y + distance_m * ny};
  }
  return out;
}

double contour_length(const Contour& c) { return ArcLength(c).length(); }

Point2 contour_centroid(const Contour& c) {
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& p = c[i];
    const auto& q = c[(i + 1) % c.size()];
    const double w = p.x * q.y - q.x * p.y;
    a += w;
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
  }
  a *= 0.5;
  return {cx / (6.0 * a), cy / (6.0 * a)};
}

AcquisitionGeometry full_contour_geometry_count(const TissueMap& map, int n_elements,
                                                const ContourOptions& opts, int n_views) {
  if (n_elements < 16) {
    throw std::invalid_argument("full-aperture geometry needs at least 16 elements, got " +
                                std::to_string(n_elements));
  }
  if (n_views < 0 || n_views > n_elements) {
    throw std::invalid_argument("n_views must lie in [0, n_elements]");
  }
  const Contour head = head_contour(map);
  const Point2 centre = contour_centroid(head);
  const Contour ring = offset_contour(head, opts.offset_m);
  const ArcLength arc(ring);
  const double s0 = arc.at_angle(centre, 0.0);
  const double step = arc.length() / n_elements;
  std::vector<Element> elements;
  elements.reserve(static_cast<std::size_t>(n_elements));
  for (int i = 0; i < n_elements; ++i) elements.push_back({arc.at(s0 + i * step), i});
  auto g = every_element_fires(std::move(elements), centre, n_views);
  require_inside(g, map);
  return g;
}

AcquisitionGeometry full_contour_geometry(const TissueMap& map, double element_spacing_m,
                                          const ContourOptions& opts, int n_views) {
  if (!(element_spacing_m > 0.0)) throw std::invalid_argument("element spacing must be > 0");
  const Contour ring = offset_contour(head_contour(map), opts.offset_m);
  const int n = static_cast<int>(std::lround(contour_length(ring) / element_spacing_m));
  return full_contour_geometry_count(map, n, opts, n_views);
}

AcquisitionGeometry partial_arc_geometry(const TissueMap& map, int n_sweeps, int n_elements,
                                         const ArcOptions& opts) {
  if (n_elements < 3 || n_elements % 2 == 0) {
    throw std::invalid_argument("partial arc needs an odd element count >= 3 (got " +
                                std::to_string(n_elements) + "): no unique centre element");
  }
  if (n_sweeps < 1) throw std::invalid_argument("partial arc needs at least one sweep");
  if (!(opts.arc_span_deg > 0.0 && opts.arc_span_deg < 360.0)) {
    throw std::invalid_argument("arc span must lie in (0, 360) degrees");
  }
  const Contour head = head_contour(map);
  const Point2 centre = contour_centroid(head);
  const Contour ring = offset_contour(head, opts.contour.offset_m);
  const ArcLength arc(ring);
  const double L = arc.length();

  AcquisitionGeometry g;
  g.mode = AcquisitionMode::Partial;
  const int half = (n_elements - 1) / 2;
  for (int k = 0; k < n_sweeps; ++k) {
    const double angle = 360.0 * k / n_sweeps;
    const double sc = arc.at_angle(centre, deg_to_rad(angle));
    double s_lo = arc.at_angle(centre, deg_to_rad(angle - 0.5 * opts.arc_span_deg));
    double s_hi = arc.at_angle(centre, deg_to_rad(angle + 0.5 * opts.arc_span_deg));
    double span = s_hi - s_lo;
    if (span < 0.0) span += L;
    const double step = span / (n_elements - 1);
    Shot shot;
    shot.sweep_id = k;
    shot.angle_deg = angle;
    for (int j = 0; j < n_elements; ++j) {
      const int index = k * n_elements + j;
      g.elements.push_back({arc.at(sc + (j - half) * step), index});
      if (j == half) {
        shot.source_element = index;
      } else {
        shot.receiver_elements.push_back(index);
      }
    }
    g.shots.push_back(std::move(shot));
  }
  require_inside(g, map);
  return g;
}

AcquisitionGeometry ring_geometry(Point2 centre_m, double radius_m, int n_elements) {
  if (n_elements < 2) throw std::invalid_argument("ring needs at least two elements");
  if (!(radius_m > 0.0)) throw std::invalid_argument("ring radius must be > 0");
  std::vector<Element> elements;
  for (int i = 0; i < n_elements; ++i) {
    const double a = 2.0 * kPi * i / n_elements;
    elements.push_back({{centre_m.x + radius_m * std::cos(a), centre_m.y + radius_m * std::sin(a)}, i});
  }
  return every_element_fires(std::move(elements), centre_m, 0);
}

}  // namespace tus
