#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tus/imaging.hpp"

namespace tus {

enum class PerturbationKind { Original, PM, RT, MR };

std::string to_string(PerturbationKind k);
PerturbationKind perturbation_kind_from_string(const std::string& s);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::Original;
  int shift_px = 20;
  /// Fixed quarter turn for every fragment; unset draws one per fragment.
  std::optional<int> rotation_deg;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Translation along one of +x, -x, +y, -y with zero fill.
Image shift_image(const Image& in, int dx, int dy);

/// Counter-clockwise quarter turns of the largest centred square; cells
/// outside the square are left as they are.
Image rotate_quarter(const Image& in, int degrees);

/// PM: each fragment shifted by shift_px in a per-fragment random axis
/// direction. RT: per-fragment random quarter turn. MR: PM then RT.
/// Draws depend only on (seed, view_id).
FragmentSet perturb_fragments(const FragmentSet& set, const PerturbationSpec& spec);

/// Adds N(0, sigma^2) to every cell, no clipping. The noise of a fragment
/// depends only on (seed, view_id).
FragmentSet add_noise(const FragmentSet& set, double sigma, std::uint64_t seed);

/// Keeps round(keep_fraction * n) fragments chosen uniformly without
/// replacement, in their original order.
FragmentSet subsample_fragments(const FragmentSet& set, double keep_fraction, std::uint64_t seed);

/// Each fragment mapped to [0, 1] (constant fragments become zeros).
FragmentSet normalize01_fragments(const FragmentSet& set);

}  // namespace tus
