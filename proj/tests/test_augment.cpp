#include <cmath>
#include <random>

#include "doctest.h"
#include "tus/augment.hpp"

using namespace tus;

namespace {

FragmentSet blobs(int n, int size = 64) {
  FragmentSet set;
  for (int k = 0; k < n; ++k) {
    TraFragment f;
    f.image = Image(size, size, 0.0);
    for (int i = 24; i < 36; ++i) {
      for (int j = 20; j < 30 + k % 5; ++j) {
        if (f.image.contains(i, j)) f.image(i, j) = 1.0 + 0.1 * i + 0.01 * j;
      }
    }
    f.view_id = k;
    f.sweep_angle_deg = 7.2 * k;
    set.fragments.push_back(f);
  }
  return set;
}

std::array<double, 2> support_centroid(const Image& im) {
  double sx = 0, sy = 0, n = 0;
  for (int i = 0; i < im.nx(); ++i) {
    for (int j = 0; j < im.ny(); ++j) {
      if (im(i, j) != 0.0) {
        sx += i;
        sy += j;
        n += 1;
      }
    }
  }
  return {sx / n, sy / n};
}

double sample_std(const Image& a, const Image& b) {
  double m = 0, m2 = 0;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    m += d;
    m2 += d * d;
  }
  m /= n;
  return std::sqrt((m2 - n * m * m) / (n - 1));
}

}  // namespace

TEST_CASE("perturbation kind names") {
  for (auto k : {PerturbationKind::Original, PerturbationKind::PM, PerturbationKind::RT, PerturbationKind::MR}) {
    CHECK(perturbation_kind_from_string(to_string(k)) == k);
  }
  CHECK(perturbation_kind_from_string("mr") == PerturbationKind::MR);
  CHECK_THROWS_AS(perturbation_kind_from_string("flip"), std::invalid_argument);
}

TEST_CASE("Original is the identity") {
  const FragmentSet s = blobs(4);
  PerturbationSpec spec;
  const FragmentSet out = perturb_fragments(s, spec);
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(out.fragments[k].image == s.fragments[k].image);
}

TEST_CASE("PM moves the support by exactly the shift along one axis") {
  const FragmentSet s = blobs(12);
  PerturbationSpec spec;
  spec.kind = PerturbationKind::PM;
  spec.shift_px = 20;
  spec.seed = 11;
  const FragmentSet out = perturb_fragments(s, spec);
  std::array<int, 4> seen{};
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto a = support_centroid(s.fragments[k].image);
    const auto b = support_centroid(out.fragments[k].image);
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const bool along_x = std::abs(std::abs(dx) - 20.0) < 1e-12 && std::abs(dy) < 1e-12;
    const bool along_y = std::abs(std::abs(dy) - 20.0) < 1e-12 && std::abs(dx) < 1e-12;
    CHECK((along_x || along_y));
    seen[static_cast<std::size_t>((along_x ? 0 : 2) + ((dx + dy) < 0 ? 1 : 0))]++;
    CHECK(out.fragments[k].view_id == s.fragments[k].view_id);
  }
  int directions = 0;
  for (int c : seen) directions += c > 0;
  CHECK(directions >= 2);
  CHECK(perturb_fragments(s, spec).fragments[3].image == out.fragments[3].image);
  spec.shift_px = 64;
  CHECK_THROWS_AS(perturb_fragments(s, spec), std::invalid_argument);
}

TEST_CASE("RT with every rotation at zero is the identity") {
  const FragmentSet s = blobs(3);
  PerturbationSpec spec;
  spec.kind = PerturbationKind::RT;
  bool found = false;
  for (std::uint64_t seed = 0; seed < 5000 && !found; ++seed) {
    spec.seed = seed;
    const FragmentSet out = perturb_fragments(s, spec);
    bool same = true;
    for (std::size_t k = 0; k < s.size(); ++k) same = same && out.fragments[k].image == s.fragments[k].image;
    found = same;
  }
  CHECK(found);
  spec.rotation_deg = 0;
  CHECK(perturb_fragments(s, spec).fragments[1].image == s.fragments[1].image);
  spec.rotation_deg = 45;
  CHECK_THROWS_AS(perturb_fragments(s, spec), std::invalid_argument);
}

TEST_CASE("quarter rotations") {
  Image a(4, 4, 0.0);
  a(0, 0) = 1.0;
  a(3, 0) = 2.0;
  const Image r = rotate_quarter(a, 90);
  CHECK(r(3, 0) == 1.0);
  CHECK(r(3, 3) == 2.0);
  CHECK(rotate_quarter(rotate_quarter(a, 180), 180) == a);
  CHECK(rotate_quarter(a, 270) == rotate_quarter(rotate_quarter(a, 180), 90));
  CHECK(rotate_quarter(a, -90) == rotate_quarter(a, 270));
  CHECK_THROWS_AS(rotate_quarter(a, 30), std::invalid_argument);
  // Non-square: only the centred square turns.
  Image b(4, 6, 0.0);
  b(0, 0) = 5.0;
  b(0, 1) = 6.0;
  const Image rb = rotate_quarter(b, 90);
  CHECK(rb(0, 0) == 5.0);
  CHECK(rb(3, 1) == 6.0);
}

TEST_CASE("MR combines move and rotation deterministically") {
  const FragmentSet s = blobs(5);
  PerturbationSpec spec;
  spec.kind = PerturbationKind::MR;
  spec.rotation_deg = 90;
  spec.seed = 4;
  const FragmentSet out = perturb_fragments(s, spec);
  PerturbationSpec pm = spec;
  pm.kind = PerturbationKind::PM;
  const FragmentSet moved = perturb_fragments(s, pm);
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(out.fragments[k].image == rotate_quarter(moved.fragments[k].image, 90));
}

TEST_CASE("noise statistics") {
  FragmentSet s = blobs(4);
  CHECK(add_noise(s, 0.0, 1).fragments[0].image == s.fragments[0].image);
  const FragmentSet a = add_noise(s, 0.2, 1);
  const FragmentSet b = add_noise(s, 0.2, 2);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double sa = sample_std(a.fragments[k].image, s.fragments[k].image);
    const double sb = sample_std(b.fragments[k].image, s.fragments[k].image);
    CHECK(std::abs(sa - 0.2) < 0.01);
    CHECK(std::abs(sb - 0.2) < 0.01);
    CHECK_FALSE(a.fragments[k].image == b.fragments[k].image);
    // Variance ratio of two 4096-sample draws stays well inside an F-test band.
    CHECK(std::abs(sa * sa / (sb * sb) - 1.0) < 0.12);
  }
  CHECK(add_noise(s, 0.2, 1).fragments[2].image == a.fragments[2].image);
  CHECK_THROWS_AS(add_noise(s, -0.1, 1), std::invalid_argument);
}

TEST_CASE("subsampling") {
  const FragmentSet s = blobs(50, 16);
  const FragmentSet all = subsample_fragments(s, 1.0, 3);
  REQUIRE(all.size() == 50);
  for (std::size_t k = 0; k < 50; ++k) CHECK(all.fragments[k].view_id == static_cast<int>(k));
  const FragmentSet half = subsample_fragments(s, 0.5, 3);
  CHECK(half.size() == 25);
  for (std::size_t k = 1; k < half.size(); ++k) CHECK(half.fragments[k].view_id > half.fragments[k - 1].view_id);
  CHECK(subsample_fragments(s, 0.02, 3).size() == 1);
  CHECK(subsample_fragments(s, 0.5, 3).fragments[7].view_id == half.fragments[7].view_id);
  CHECK_THROWS_AS(subsample_fragments(s, 0.001, 3), std::invalid_argument);
  CHECK_THROWS_AS(subsample_fragments(s, 0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(subsample_fragments(s, 1.5, 3), std::invalid_argument);
}
