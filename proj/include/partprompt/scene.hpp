#pragma once

#include <cstdint>
#include <vector>

#include "partprompt/feature.hpp"
#include "partprompt/rng.hpp"

namespace partprompt {

/// Synthetic reference/target pair with K latent parts. The object is a box
/// cut into K vertical strips; every strip draws features around its own
/// Gaussian center, the background around a few background centers laid out
/// as vertical bands. The target re-places, resizes and re-splits the box.
struct SceneSpec {
  int height = 32;
  int width = 32;
  int dim = 32;
  int parts = 4;
  double center_scale = 1.0;          // std of center coordinates
  double noise = 0.4;                 // per-coordinate feature noise std
  std::vector<double> part_spreads;   // optional per-part noise override
  int background_clusters = 2;
  double object_fraction = 0.5;       // box side relative to the grid side
  int max_shift = 4;                  // target box translation, cells
  double deform = 0.25;               // relative jitter of box size and strip widths
  bool identical_layouts = false;
  RngSeed seed{};

  void validate() const;
};

struct Scene {
  FeatureMap reference;
  BinaryMask reference_mask;
  FeatureMap target;
  BinaryMask target_truth;
  /// Label maps: 0 = background, k + 1 = part k.
  std::vector<std::uint8_t> reference_parts;
  std::vector<std::uint8_t> target_parts;
};

/// Deterministic given spec.seed. SpecInfeasible when the box cannot hold K
/// disjoint strips.
Scene generate_scene(const SceneSpec& spec);

}  // namespace partprompt
