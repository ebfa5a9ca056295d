#pragma once

#include <vector>

#include "partprompt/feature.hpp"
#include "partprompt/rng.hpp"

namespace partprompt {

/// Part-level features: k means plus each input vector's part index.
struct PartSet {
  std::size_t k = 0;
  Matrix means;
  std::vector<int> assignments;
  double inertia = 0.0;
};

/// Per-restart inertia after every Lloyd update, for checking monotonicity.
struct ClusterTrace {
  std::vector<std::vector<double>> restarts;
};

inline constexpr int kMaxLloydIterations = 100;
inline constexpr int kClusterRestarts = 3;

/// k-means++ seeding followed by Lloyd iterations, best of three restarts with
/// sub-seeds derived from `seed`. k is clamped to the number of vectors; parts
/// that end up empty (only possible with duplicate vectors) are dropped.
PartSet cluster_parts(const FeatureSet& features, std::size_t k, RngSeed seed, ClusterTrace* trace = nullptr);

/// Same, on a bare matrix of row vectors.
PartSet cluster_parts(const Matrix& points, std::size_t k, RngSeed seed, ClusterTrace* trace = nullptr);

}  // namespace partprompt
