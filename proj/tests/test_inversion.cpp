#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "tus/inversion.hpp"

using namespace tus;

namespace {

struct Small {
  double h = 7e-4;
  int n = 16;
  VelocityModel truth = testutil::smooth_random_model(16, 16, 7e-4, 1, 1400, 1800);
  VelocityModel m0 = testutil::smooth_random_model(16, 16, 7e-4, 2, 1450, 1750);
  AcquisitionGeometry g = ring_geometry({7.5 * 7e-4, 7.5 * 7e-4}, 6.5 * 7e-4, 6);
  SourceWavelet w = ricker(300e3, 5e-8, 300);
  SolverConfig cfg;
  ChannelData obs;

  Small() {
    cfg.boundary_layer_cells = 10;
    obs = simulate_all(truth, g, w, cfg);
  }
};

ChannelData noise_data(int nt, int ns, int nr, unsigned seed) {
  ChannelData d(nt, ns, nr, 1e-7);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (double& v : d.traces) v = nd(rng);
  return d;
}

}  // namespace

TEST_CASE("misfit closed forms and naive oracle") {
  const ChannelData a = noise_data(50, 3, 4, 1);
  CHECK(misfit(a, a) == 0.0);
  ChannelData b = a;
  int m = 0;
  for (int t = 0; t < 50; t += 7) {
    b.at(t, 1, 2) += 1.0;
    ++m;
  }
  CHECK(misfit(a, b) == doctest::Approx(0.5 * m).epsilon(1e-12));
  const ChannelData c = noise_data(50, 3, 4, 2);
  double acc = 0.0;
  for (int t = 0; t < 50; ++t) {
    for (int s = 0; s < 3; ++s) {
      for (int r = 0; r < 4; ++r) acc += 0.5 * (c.at(t, s, r) - a.at(t, s, r)) * (c.at(t, s, r) - a.at(t, s, r));
    }
  }
  CHECK(misfit(a, c) == doctest::Approx(acc).epsilon(1e-12));
  CHECK_THROWS_AS(misfit(a, noise_data(50, 3, 5, 3)), std::invalid_argument);
}

TEST_CASE("gradient matches central differences") {
  Small s;
  const GradientResult gr = fwi_gradient(s.m0, s.obs, s.g, s.w, s.cfg);
  CHECK(gr.misfit == doctest::Approx(compute_misfit(s.m0, s.obs, s.g, s.w, s.cfg)).epsilon(1e-12));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 3; ++k) {
    Image d(s.n, s.n);
    for (double& v : d.values()) v = nd(rng);
    const double eps = 0.5;
    VelocityModel mp = s.m0, mm = s.m0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      mp.values.values()[i] += eps * d.values()[i];
      mm.values.values()[i] -= eps * d.values()[i];
    }
    const double fd = (compute_misfit(mp, s.obs, s.g, s.w, s.cfg) - compute_misfit(mm, s.obs, s.g, s.w, s.cfg)) / (2 * eps);
    double an = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) an += gr.gradient.values()[i] * d.values()[i];
    CHECK(std::abs(fd - an) < 0.01 * std::abs(fd));
  }
}

TEST_CASE("gradient vanishes on the true model and honours the freeze mask") {
  Small s;
  const GradientResult at_truth = fwi_gradient(s.truth, s.obs, s.g, s.w, s.cfg);
  CHECK(at_truth.misfit == 0.0);
  for (double v : at_truth.gradient.values()) CHECK(v == 0.0);

  Mask freeze(s.n, s.n, 0);
  for (int i = 0; i < s.n; ++i) freeze(i, 0) = freeze(0, i) = 1;
  const GradientResult free = fwi_gradient(s.m0, s.obs, s.g, s.w, s.cfg);
  const GradientResult masked = fwi_gradient(s.m0, s.obs, s.g, s.w, s.cfg, freeze);
  for (std::size_t i = 0; i < freeze.size(); ++i) {
    CHECK(masked.gradient.values()[i] == (freeze.values()[i] ? 0.0 : free.gradient.values()[i]));
  }
  CHECK_THROWS_AS(fwi_gradient(s.m0, s.obs, s.g, s.w, s.cfg, Mask(4, 4, 0)), std::invalid_argument);
}

TEST_CASE("gradient is additive over shots") {
  Small s;
  const GradientResult all = fwi_gradient(s.m0, s.obs, s.g, s.w, s.cfg);
  Image sum(s.n, s.n, 0.0);
  double misfit_sum = 0.0;
  for (std::size_t k = 0; k < s.g.shots.size(); ++k) {
    AcquisitionGeometry one = s.g;
    one.shots = {s.g.shots[k]};
    ChannelData d(s.obs.nt, 1, s.obs.nr, s.obs.dt_s);
    d.set_gather(0, s.obs.gather(static_cast<int>(k)));
    const GradientResult gk = fwi_gradient(s.m0, d, one, s.w, s.cfg);
    for (std::size_t i = 0; i < sum.size(); ++i) sum.values()[i] += gk.gradient.values()[i];
    misfit_sum += gk.misfit;
  }
  CHECK(all.misfit == doctest::Approx(misfit_sum).epsilon(1e-12));
  double scale = 0.0;
  for (double v : all.gradient.values()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < sum.size(); ++i) CHECK(std::abs(sum.values()[i] - all.gradient.values()[i]) < 1e-12 * scale);
}

TEST_CASE("gradient needs the sponge boundary") {
  Small s;
  SolverConfig cpml = s.cfg;
  cpml.boundary_kind = BoundaryKind::Cpml;
  CHECK_THROWS_AS(fwi_gradient(s.m0, s.obs, s.g, s.w, cpml), std::invalid_argument);
}

TEST_CASE("inversion from the true model stays put") {
  Small s;
  FwiConfig fc;
  fc.epochs = 3;
  const FwiResult r = fwi_invert(s.truth, s.obs, s.g, s.w, s.cfg, fc);
  CHECK(r.model.values == s.truth.values);
  CHECK(r.stopped_early);
  for (double m : r.misfit_history) CHECK(m == 0.0);
}

TEST_CASE("backtracking inversion decreases the misfit monotonically") {
  Small s;
  FwiConfig fc;
  fc.epochs = 5;
  int calls = 0;
  const FwiResult r = fwi_invert(s.m0, s.obs, s.g, s.w, s.cfg, fc, [&](int epoch, const VelocityModel&, double) {
    ++calls;
    CHECK(epoch == calls);
  });
  CHECK(calls == r.epochs_run);
  REQUIRE(r.misfit_history.size() == static_cast<std::size_t>(r.epochs_run) + 1);
  for (std::size_t k = 1; k < r.misfit_history.size(); ++k) CHECK(r.misfit_history[k] < r.misfit_history[k - 1]);
  CHECK(r.misfit_history.back() == doctest::Approx(compute_misfit(r.model, s.obs, s.g, s.w, s.cfg)).epsilon(1e-12));
  for (double v : r.model.values.values()) {
    CHECK(v >= VelocityModel::kMinSpeed);
    CHECK(v <= VelocityModel::kMaxSpeed);
  }
}

TEST_CASE("frozen cells never change during inversion") {
  Small s;
  FwiConfig fc;
  fc.epochs = 2;
  fc.freeze_mask = Mask(s.n, s.n, 0);
  for (int i = 0; i < s.n; ++i) (*fc.freeze_mask)(i, 3) = 1;
  const FwiResult r = fwi_invert(s.m0, s.obs, s.g, s.w, s.cfg, fc);
  for (int i = 0; i < s.n; ++i) CHECK(r.model.values(i, 3) == s.m0.values(i, 3));
}

TEST_CASE("fwi configuration") {
  CHECK(step_rule_from_string("fixed") == StepRule::Fixed);
  CHECK(step_rule_from_string(to_string(StepRule::Backtracking)) == StepRule::Backtracking);
  CHECK_THROWS_AS(step_rule_from_string("newton"), std::invalid_argument);
  FwiConfig fc;
  fc.epochs = -1;
  CHECK_THROWS_AS(fc.validate(), std::invalid_argument);
  fc = FwiConfig{};
  fc.initial_step = 0.0;
  CHECK_THROWS_AS(fc.validate(), std::invalid_argument);
}
