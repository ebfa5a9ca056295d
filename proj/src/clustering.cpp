#include "partprompt/clustering.hpp"

#include <limits>
#include <numeric>

#include "partprompt/errors.hpp"
#include "partprompt/kernels.hpp"

namespace partprompt {

namespace {

Matrix seed_centers(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centers(k, points.cols());
  auto copy_row = [&](std::size_t c, std::size_t i) {
    auto src = points.row(i);
    std::copy(src.begin(), src.end(), centers.row(c).begin());
  };

  copy_row(0, uniform_index(rng, n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = kernels::squared_distance(points.row(i), centers.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, n);
    }
    copy_row(c, pick);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], kernels::squared_distance(points.row(i), centers.row(c)));
    }
  }
  return centers;
}

// Recomputes means from the assignment. Returns indices of empty parts.
std::vector<std::size_t> update_means(const Matrix& points, const std::vector<int>& assignment, Matrix& centers) {
  const std::size_t k = centers.rows();
  const std::size_t d = points.cols();
  Matrix sums(k, d);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto a = static_cast<std::size_t>(assignment[i]);
    auto src = points.row(i);
    auto dst = sums.row(a);
    for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    ++counts[a];
  }
  std::vector<std::size_t> empty;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      empty.push_back(c);
      continue;
    }
    auto dst = centers.row(c);
    auto src = sums.row(c);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] / static_cast<double>(counts[c]);
  }
  return empty;
}

double inertia_of(const Matrix& points, const std::vector<int>& assignment, const Matrix& centers) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    s += kernels::squared_distance(points.row(i), centers.row(static_cast<std::size_t>(assignment[i])));
  }
  return s;
}

// Moves each empty center onto the point farthest from its own center, taken
// from parts that keep at least one other member. Leaves the center alone when
// every candidate already sits on its center (duplicates).
void reseed_empty(const Matrix& points, const std::vector<int>& assignment, const std::vector<std::size_t>& empty,
                  Matrix& centers) {
  std::vector<std::size_t> counts(centers.rows(), 0);
  for (int a : assignment) ++counts[static_cast<std::size_t>(a)];
  std::vector<char> taken(points.rows(), 0);
  for (std::size_t c : empty) {
    double best = 0.0;
    std::size_t pick = points.rows();
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const auto a = static_cast<std::size_t>(assignment[i]);
      if (taken[i] || counts[a] < 2) continue;
      const double d = kernels::squared_distance(points.row(i), centers.row(a));
      if (d > best) {
        best = d;
        pick = i;
      }
    }
    if (pick == points.rows()) continue;
    taken[pick] = 1;
    --counts[static_cast<std::size_t>(assignment[pick])];
    auto src = points.row(pick);
    std::copy(src.begin(), src.end(), centers.row(c).begin());
  }
}

struct LloydResult {
  Matrix centers;
  std::vector<int> assignment;
  double inertia = 0.0;
};

LloydResult run_lloyd(const Matrix& points, std::size_t k, RngSeed seed, std::vector<double>* trace) {
  Rng rng = make_rng(seed);
  LloydResult r;
  r.centers = seed_centers(points, k, rng);
  r.assignment.assign(points.rows(), -1);
  std::vector<int> next(points.rows());
  std::vector<double> sq(points.rows());

  for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
    kernels::omp::assign_nearest(points, r.centers, next, sq);
    if (next == r.assignment) break;  // stable assignment: zero inertia change
    r.assignment = next;
    const auto empty = update_means(points, r.assignment, r.centers);
    r.inertia = inertia_of(points, r.assignment, r.centers);
    if (trace) trace->push_back(r.inertia);
    if (!empty.empty()) reseed_empty(points, r.assignment, empty, r.centers);
  }
  r.inertia = inertia_of(points, r.assignment, r.centers);
  return r;
}

PartSet finalize(LloydResult best) {
  const std::size_t k = best.centers.rows();
  std::vector<std::size_t> counts(k, 0);
  for (int a : best.assignment) ++counts[static_cast<std::size_t>(a)];
  std::vector<int> remap(k, -1);
  std::size_t kept = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) remap[c] = static_cast<int>(kept++);
  }

  PartSet out;
  out.k = kept;
  out.means = Matrix(kept, best.centers.cols());
  for (std::size_t c = 0; c < k; ++c) {
    if (remap[c] < 0) continue;
    auto src = best.centers.row(c);
    std::copy(src.begin(), src.end(), out.means.row(static_cast<std::size_t>(remap[c])).begin());
  }
  out.assignments.reserve(best.assignment.size());
  for (int a : best.assignment) out.assignments.push_back(remap[static_cast<std::size_t>(a)]);
  out.inertia = best.inertia;
  return out;
}

}  // namespace

PartSet cluster_parts(const Matrix& points, std::size_t k, RngSeed seed, ClusterTrace* trace) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "part count must be >= 1");
  if (points.rows() == 0) throw Error(ErrorKind::EmptySelection, "cannot cluster an empty feature set");
  k = std::min(k, points.rows());

  LloydResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kClusterRestarts; ++r) {
    std::vector<double>* restart_trace = nullptr;
    if (trace) restart_trace = &trace->restarts.emplace_back();
    auto run = run_lloyd(points, k, derive_seed(seed, {static_cast<std::uint64_t>(r)}), restart_trace);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return finalize(std::move(best));
}

PartSet cluster_parts(const FeatureSet& features, std::size_t k, RngSeed seed, ClusterTrace* trace) {
  return cluster_parts(features.vectors, k, seed, trace);
}

}  // namespace partprompt
