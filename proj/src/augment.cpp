#include "tus/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

#include "tus/metrics.hpp"

namespace tus {

namespace {

std::mt19937_64 fragment_rng(std::uint64_t seed, int view_id, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(view_id), stream};
  return std::mt19937_64(seq);
}

constexpr std::uint32_t kShiftStream = 1;
constexpr std::uint32_t kRotateStream = 2;
constexpr std::uint32_t kNoiseStream = 3;

}  // namespace

std::string to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::Original: return "Original";
    case PerturbationKind::PM: return "PM";
    case PerturbationKind::RT: return "RT";
    case PerturbationKind::MR: return "MR";
  }
  return "Original";
}

PerturbationKind perturbation_kind_from_string(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "ORIGINAL") return PerturbationKind::Original;
  if (u == "PM") return PerturbationKind::PM;
  if (u == "RT") return PerturbationKind::RT;
  if (u == "MR") return PerturbationKind::MR;
  throw std::invalid_argument("unknown perturbation kind: " + s);
}

void PerturbationSpec::validate() const {
  if (shift_px < 0) throw std::invalid_argument("shift_px must be >= 0");
  if (rotation_deg && (*rotation_deg % 90 != 0 || *rotation_deg < 0 || *rotation_deg >= 360)) {
    throw std::invalid_argument("rotation_deg must be 0, 90, 180 or 270");
  }
}

Image shift_image(const Image& in, int dx, int dy) {
  Image out(in.nx(), in.ny(), 0.0);
  for (int ix = 0; ix < in.nx(); ++ix) {
    const int sx = ix - dx;
    if (sx < 0 || sx >= in.nx()) continue;
    for (int iy = 0; iy < in.ny(); ++iy) {
      const int sy = iy - dy;
      if (sy < 0 || sy >= in.ny()) continue;
      out(ix, iy) = in(sx, sy);
    }
  }
  return out;
}

Image rotate_quarter(const Image& in, int degrees) {
  if (degrees % 90 != 0) throw std::invalid_argument("rotate_quarter: quarter turns only");
  const int turns = ((degrees / 90) % 4 + 4) % 4;
  Image out = in;
  if (turns == 0 || in.empty()) return out;
  const int s = std::min(in.nx(), in.ny());
  const int ox = (in.nx() - s) / 2;
  const int oy = (in.ny() - s) / 2;
  for (int t = 0; t < turns; ++t) {
    const Image src = out;
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) out(ox + s - 1 - j, oy + i) = src(ox + i, oy + j);
    }
  }
  return out;
}

FragmentSet perturb_fragments(const FragmentSet& set, const PerturbationSpec& spec) {
  spec.validate();
  FragmentSet out = set;
  if (spec.kind == PerturbationKind::Original) return out;
  const bool move = spec.kind == PerturbationKind::PM || spec.kind == PerturbationKind::MR;
  const bool turn = spec.kind == PerturbationKind::RT || spec.kind == PerturbationKind::MR;
  for (auto& f : out.fragments) {
    if (move) {
      if (spec.shift_px >= std::min(f.image.nx(), f.image.ny())) {
        throw std::invalid_argument("perturb_fragments: shift is not smaller than the grid");
      }
      auto rng = fragment_rng(spec.seed, f.view_id, kShiftStream);
      const int dir = static_cast<int>(rng() % 4);
      const int dx = dir == 0 ? spec.shift_px : dir == 1 ? -spec.shift_px : 0;
      const int dy = dir == 2 ? spec.shift_px : dir == 3 ? -spec.shift_px : 0;
      f.image = shift_image(f.image, dx, dy);
    }
    if (turn) {
      int deg = 0;
      if (spec.rotation_deg) {
        deg = *spec.rotation_deg;
      } else {
        auto rng = fragment_rng(spec.seed, f.view_id, kRotateStream);
        deg = 90 * static_cast<int>(rng() % 4);
      }
      f.image = rotate_quarter(f.image, deg);
    }
  }
  return out;
}

FragmentSet add_noise(const FragmentSet& set, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_noise: sigma must be >= 0");
  FragmentSet out = set;
  if (sigma == 0.0) return out;
  for (auto& f : out.fragments) {
    auto rng = fragment_rng(seed, f.view_id, kNoiseStream);
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : f.image.values()) v += noise(rng);
  }
  return out;
}

FragmentSet subsample_fragments(const FragmentSet& set, double keep_fraction, std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("subsample_fragments: keep fraction must be in (0, 1]");
  }
  const std::size_t n = set.size();
  const auto keep = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(n)));
  if (keep == 0) throw std::invalid_argument("subsample_fragments: selection would be empty");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  FragmentSet out;
  out.provenance = set.provenance;
  for (std::size_t i : idx) out.fragments.push_back(set.fragments[i]);
  return out;
}

FragmentSet normalize01_fragments(const FragmentSet& set) {
  FragmentSet out = set;
  for (auto& f : out.fragments) f.image = normalize01(f.image).image;
  return out;
}

}  // namespace tus
