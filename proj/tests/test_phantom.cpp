#include <cmath>
#include <set>
#include <utility>

#include "doctest.h"
#include "tus/phantom.hpp"

using namespace tus;

namespace {

std::set<std::pair<int, int>> adjacent_pairs(const TissueMap& m) {
  std::set<std::pair<int, int>> out;
  for (int i = 0; i < m.nx(); ++i) {
    for (int j = 0; j < m.ny(); ++j) {
      const int a = static_cast<int>(m.labels(i, j));
      if (i + 1 < m.nx()) {
        const int b = static_cast<int>(m.labels(i + 1, j));
        if (a != b) out.insert({std::min(a, b), std::max(a, b)});
      }
      if (j + 1 < m.ny()) {
        const int b = static_cast<int>(m.labels(i, j + 1));
        if (a != b) out.insert({std::min(a, b), std::max(a, b)});
      }
    }
  }
  return out;
}

int count(const TissueMap& m, TissueClass c) {
  int n = 0;
  for (auto v : m.labels.values()) n += v == c;
  return n;
}

}  // namespace

TEST_CASE("paper-size slice has every nested class and only nested neighbours") {
  PhantomSpec spec;
  spec.seed = 1;
  const TissueMap m = build_slice_phantom(spec);
  CHECK(m.nx() == 200);
  CHECK(m.ny() == 221);
  for (auto c : {TissueClass::Skull, TissueClass::CsFluid, TissueClass::GrayMatter, TissueClass::WhiteMatter,
                 TissueClass::Ventricles, TissueClass::Cerebellum}) {
    CHECK(count(m, c) > 0);
  }
  CHECK(count(m, TissueClass::Skin) == 0);
  // Each layer may only touch the one enclosing it and the one it encloses.
  const std::set<std::pair<int, int>> allowed{{0, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {3, 7}, {4, 7}};
  for (const auto& p : adjacent_pairs(m)) {
    INFO("labels " << p.first << "-" << p.second);
    CHECK(allowed.count(p) == 1);
  }
  // Border row/column stays coupling medium.
  for (int i = 0; i < m.nx(); ++i) {
    CHECK(m.labels(i, 0) == TissueClass::Background);
    CHECK(m.labels(i, m.ny() - 1) == TissueClass::Background);
  }
}

TEST_CASE("skin layer wraps the skull when requested") {
  PhantomSpec spec;
  spec.nx = 96;
  spec.ny = 96;
  spec.skin = true;
  spec.cerebellum = false;
  const TissueMap m = build_slice_phantom(spec);
  CHECK(count(m, TissueClass::Skin) > 0);
  CHECK(count(m, TissueClass::Cerebellum) == 0);
  for (const auto& p : adjacent_pairs(m)) {
    CHECK(p != std::make_pair(0, 2));
  }
}

TEST_CASE("desk-size slice is valid and deterministic per seed") {
  PhantomSpec spec;
  spec.nx = 64;
  spec.ny = 64;
  spec.seed = 0;
  const TissueMap a = build_slice_phantom(spec);
  const TissueMap b = build_slice_phantom(spec);
  CHECK(a.labels == b.labels);
  CHECK(count(a, TissueClass::Ventricles) > 0);
  spec.seed = 5;
  CHECK_FALSE(build_slice_phantom(spec).labels == a.labels);
}

TEST_CASE("phantom rejects grids too small for the layers") {
  PhantomSpec spec;
  spec.nx = 20;
  spec.ny = 20;
  CHECK_THROWS_AS(build_slice_phantom(spec), std::invalid_argument);
  spec.nx = 64;
  spec.ny = 64;
  spec.spacing_m = 0.0;
  CHECK_THROWS_AS(build_slice_phantom(spec), std::invalid_argument);
  spec.spacing_m = 7e-4;
  spec.layer_eccentricities = {1.0, 1.0};
  CHECK_THROWS_AS(build_slice_phantom(spec), std::invalid_argument);
}

TEST_CASE("rasterize maps labels through the speed table") {
  TissueMap skull{Array2D<TissueClass>(8, 8, TissueClass::Skull), 7e-4};
  const VelocityModel s = rasterize(skull, VelocityTable::brain());
  for (double v : s.values.values()) CHECK(v == 3000.0);
  TissueMap water{Array2D<TissueClass>(8, 8, TissueClass::Background), 7e-4};
  const VelocityModel w = rasterize(water, VelocityTable::brain());
  for (double v : w.values.values()) CHECK(v == 1500.0);

  PhantomSpec spec;
  spec.nx = 96;
  spec.ny = 96;
  const TissueMap m = build_slice_phantom(spec);
  const VelocityModel model = rasterize(m, VelocityTable::brain());
  double lo = 1e9;
  for (std::size_t i = 0; i < model.values.size(); ++i) {
    if (is_intracranial(m.labels.values()[i])) lo = std::min(lo, model.values.values()[i]);
  }
  CHECK(lo == 1480.0);
}

TEST_CASE("homogeneous interior") {
  const TissueMap two = build_two_layer_phantom(48, 48, 7e-4, 7);
  const VelocityModel truth = rasterize(two, VelocityTable::brain());
  const VelocityModel h = homogeneous_interior(truth, two, 1500.0);
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    const TissueClass c = two.labels.values()[i];
    if (is_intracranial(c)) {
      CHECK(h.values.values()[i] == 1500.0);
    } else {
      CHECK(h.values.values()[i] == truth.values.values()[i]);
    }
  }
  CHECK(homogeneous_interior(h, two, 1500.0).values == h.values);

  PhantomSpec spec;
  spec.nx = 96;
  spec.ny = 96;
  const TissueMap m = build_slice_phantom(spec);
  const VelocityModel hm = homogeneous_interior(rasterize(m, VelocityTable::brain()), m, 1500.0);
  double lo = 1e9, hi = 0.0;
  for (std::size_t i = 0; i < hm.values.size(); ++i) {
    if (!is_intracranial(m.labels.values()[i])) continue;
    lo = std::min(lo, hm.values.values()[i]);
    hi = std::max(hi, hm.values.values()[i]);
  }
  CHECK(lo == hi);
}

TEST_CASE("smooth_model identity, constants and step midpoint") {
  const VelocityModel c = constant_model(30, 20, 7e-4, 1700.0);
  CHECK(smooth_model(c, 0.0).values == c.values);
  const VelocityModel sc = smooth_model(c, 3.0);
  for (double v : sc.values.values()) CHECK(v == doctest::Approx(1700.0).epsilon(1e-12));
  CHECK_THROWS_AS(smooth_model(c, -1.0), std::invalid_argument);

  // Step 1500 | 3000 between ix = 49 and ix = 50; direct convolution oracle with
  // half-sample mirror padding.
  const int nx = 100, ny = 12;
  VelocityModel step = constant_model(nx, ny, 7e-4, 1500.0);
  for (int i = nx / 2; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) step.values(i, j) = 3000.0;
  }
  const double sigma = 4.0;
  const VelocityModel s = smooth_model(step, sigma);
  const int r = static_cast<int>(std::ceil(4.0 * sigma));
  double wsum = 0.0;
  for (int k = -r; k <= r; ++k) wsum += std::exp(-0.5 * k * k / (sigma * sigma));
  for (int i = 0; i < nx; ++i) {
    double acc = 0.0;
    for (int k = -r; k <= r; ++k) {
      int q = i + k;
      if (q < 0) q = -q - 1;
      if (q >= nx) q = 2 * nx - q - 1;
      acc += std::exp(-0.5 * k * k / (sigma * sigma)) * (q >= nx / 2 ? 3000.0 : 1500.0);
    }
    CHECK(s.values(i, 5) == doctest::Approx(acc / wsum).epsilon(1e-12));
    if (i > 0) CHECK(s.values(i, 5) >= s.values(i - 1, 5));
  }
  CHECK(0.5 * (s.values(49, 5) + s.values(50, 5)) == doctest::Approx(2250.0).epsilon(1e-12));
}

TEST_CASE("smooth_interior leaves skull and exterior alone") {
  const TissueMap two = build_two_layer_phantom(48, 48, 7e-4, 7);
  const VelocityModel truth = rasterize(two, VelocityTable::brain());
  const VelocityModel s = smooth_interior(truth, two, 3.0);
  bool changed = false;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double a = s.values.values()[i], b = truth.values.values()[i];
    if (!is_intracranial(two.labels.values()[i])) {
      CHECK(a == b);
    } else {
      changed = changed || a != b;
      CHECK(a >= 1480.0 - 1e-9);
      CHECK(a <= 1550.0 + 1e-9);
    }
  }
  CHECK(changed);
}

TEST_CASE("tissue names and interface image") {
  for (int v = 0; v < kTissueClassCount; ++v) {
    const auto c = static_cast<TissueClass>(v);
    CHECK(tissue_class_from_string(to_string(c)) == c);
  }
  CHECK_THROWS_AS(tissue_class_from_string("bone"), std::invalid_argument);
  CHECK(is_valid_tissue_label(7));
  CHECK_FALSE(is_valid_tissue_label(8));

  TissueMap m{Array2D<TissueClass>(7, 7, TissueClass::Background), 1e-3};
  for (int i = 2; i <= 4; ++i) {
    for (int j = 2; j <= 4; ++j) m.labels(i, j) = TissueClass::Skull;
  }
  const Image e = interface_image(m, TissueClass::Skull);
  int n = 0;
  for (double v : e.values()) n += v == 1.0;
  CHECK(n == 8);
  CHECK(e(3, 3) == 0.0);
  CHECK(interface_image(m)(1, 3) == 1.0);
}
