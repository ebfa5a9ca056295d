#pragma once

#include <array>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "partprompt/feature.hpp"
#include "partprompt/rng.hpp"
#include "partprompt/transport.hpp"

namespace partprompt {

enum class Measure { WassersteinExact, Sinkhorn, JsTwoPc, Hungarian };

std::string_view to_string(Measure measure);
/// Accepts the canonical names plus the short CLI aliases "wasserstein" and "js".
Measure parse_measure(std::string_view text);

struct DistanceMeta {
  std::size_t size_a = 0;  // after subsampling
  std::size_t size_b = 0;
  std::size_t iterations = 0;  // simplex pivots or Sinkhorn sweeps
  bool converged = true;
  std::size_t parts = 0;  // hungarian: matched part count
  std::size_t bins = 0;   // js: histogram bins per axis
  double epsilon = 0.0;   // sinkhorn
};

struct DistanceResult {
  double value = 0.0;
  Measure measure = Measure::WassersteinExact;
  DistanceMeta meta;
};

nlohmann::ordered_json to_json(const DistanceResult& result);

/// C(i, j) = 1 - cos(A_i, B_j); the ground cost for every transport measure.
Matrix cost_matrix(const FeatureSet& a, const FeatureSet& b);

/// Seeded uniform subsample without replacement, original order preserved.
FeatureSet subsample(const FeatureSet& set, std::size_t cap, RngSeed seed);

inline constexpr std::size_t kDefaultSubsampleCap = 1024;

/// Exact optimal transport cost between the uniform empirical measures on A
/// and B under cosine distance. Sets larger than `cap` are subsampled first.
DistanceResult wasserstein_exact(const FeatureSet& a, const FeatureSet& b, std::size_t cap = kDefaultSubsampleCap,
                                 RngSeed seed = {});

struct SinkhornPlan {
  TransportPlan plan;
  double transport_cost = 0.0;  // sum T_ij C_ij, entropy excluded
  std::size_t iterations = 0;
  bool converged = false;
  double marginal_violation = 0.0;
};

/// Log-domain Sinkhorn with uniform marginals and epsilon warm starts. Stops
/// when the row-marginal violation drops below `tol`; the returned plan is
/// then rounded onto the exact marginals.
SinkhornPlan sinkhorn(const Matrix& cost, double epsilon, std::size_t max_iter, double tol);

DistanceResult wasserstein_sinkhorn(const FeatureSet& a, const FeatureSet& b, double epsilon,
                                    std::size_t max_iter = 10000, double tol = 1e-9);

struct Projection2 {
  std::array<std::vector<double>, 2> basis;  // orthonormal rows
  std::vector<double> mean;
  std::array<double, 2> eigenvalues{};

  std::array<double, 2> project(std::span<const double> x) const;
};

/// Top two principal axes of X's covariance; each axis' first component with
/// magnitude above 1e-12 is made positive. DegenerateData when all points
/// coincide.
Projection2 pca_top2(const FeatureSet& x);

/// Base-2 Jensen-Shannon divergence of two histograms after adding `smoothing`
/// to every count and normalizing. Result in [0, 1].
double js_divergence(std::span<const double> counts_p, std::span<const double> counts_q, double smoothing);

/// Projects A and B onto A's top two principal axes, bins both over their
/// joint bounding box (bins x bins) and returns the JS divergence.
DistanceResult js_divergence_2pc(const FeatureSet& a, const FeatureSet& b, std::size_t bins = 32);

/// Clusters A and B into the same number of parts, matches part means by
/// cosine distance with the Hungarian method, returns the mean matched cost.
DistanceResult hungarian_part_distance(const FeatureSet& a, const FeatureSet& b, std::size_t k = 8,
                                       RngSeed seed = {});

struct DistanceOptions {
  Measure measure = Measure::WassersteinExact;
  std::size_t cap = kDefaultSubsampleCap;
  RngSeed seed{};
  double sinkhorn_epsilon = 0.05;
  std::size_t sinkhorn_max_iter = 10000;
  double sinkhorn_tol = 1e-9;
  std::size_t js_bins = 32;
  std::size_t hungarian_parts = 8;
};

DistanceResult measure_distance(const FeatureSet& a, const FeatureSet& b, const DistanceOptions& options);

}  // namespace partprompt
