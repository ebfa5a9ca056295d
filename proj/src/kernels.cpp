#include "partprompt/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace partprompt::kernels {

namespace {

// Below this many scalar operations the parallel region costs more than it saves.
constexpr std::ptrdiff_t kParallelGrain = 1 << 14;

bool worth_parallel(std::size_t rows, std::size_t work_per_row) {
  return static_cast<std::ptrdiff_t>(rows * work_per_row) >= kParallelGrain;
}

double norm_of(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_cosine_row(std::span<const double> x, double norm_x, const Matrix& b,
                      const std::vector<double>& norms_b, double empty_value) {
  if (b.rows() == 0) return empty_value;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < b.rows(); ++j) best = std::max(best, cosine(x, norm_x, b.row(j), norms_b[j]));
  return best;
}

void nearest_one(std::span<const double> p, const Matrix& centers, int& assignment, double& sq_dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = squared_distance(p, centers.row(c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  assignment = best;
  sq_dist = best_d;
}

// -eps * logsumexp((w_k - c_k) / eps) over k, with the max subtracted first.
template <class CostAt>
double softmin(std::size_t n, std::span<const double> w, double eps, CostAt cost_at) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) m = std::max(m, (w[k] - cost_at(k)) / eps);
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp((w[k] - cost_at(k)) / eps - m);
  return -eps * (m + std::log(s));
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

double cosine(std::span<const double> a, double norm_a, std::span<const double> b, double norm_b) {
  const double c = dot(a, b) / (norm_a * norm_b + kCosineEps);
  return std::clamp(c, -1.0, 1.0);
}

namespace serial {

std::vector<double> row_norms(const Matrix& a) {
  std::vector<double> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = norm_of(a.row(i));
  return out;
}

Matrix cosine_matrix(const Matrix& a, const Matrix& b) {
  const auto na = row_norms(a);
  const auto nb = row_norms(b);
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = cosine(a.row(i), na[i], b.row(j), nb[j]);
  }
  return out;
}

std::vector<double> max_cosine(const Matrix& a, const Matrix& b, double empty_value) {
  const auto na = row_norms(a);
  const auto nb = row_norms(b);
  std::vector<double> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = max_cosine_row(a.row(i), na[i], b, nb, empty_value);
  return out;
}

void assign_nearest(const Matrix& points, const Matrix& centers, std::span<int> assignment,
                    std::span<double> sq_dist) {
  for (std::size_t i = 0; i < points.rows(); ++i) nearest_one(points.row(i), centers, assignment[i], sq_dist[i]);
}

void softmin_rows(const Matrix& cost, std::span<const double> g, double eps, std::span<double> out) {
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    out[i] = softmin(cost.cols(), g, eps, [&](std::size_t j) { return cost(i, j); });
  }
}

void softmin_cols(const Matrix& cost, std::span<const double> f, double eps, std::span<double> out) {
  for (std::size_t j = 0; j < cost.cols(); ++j) {
    out[j] = softmin(cost.rows(), f, eps, [&](std::size_t i) { return cost(i, j); });
  }
}

}  // namespace serial

namespace omp {

std::vector<double> row_norms(const Matrix& a) {
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
  std::vector<double> out(a.rows());
#pragma omp parallel for schedule(static) if (worth_parallel(a.rows(), a.cols()))
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = norm_of(a.row(i));
  return out;
}

Matrix cosine_matrix(const Matrix& a, const Matrix& b) {
  const auto na = row_norms(a);
  const auto nb = row_norms(b);
  Matrix out(a.rows(), b.rows());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (worth_parallel(a.rows(), b.rows() * a.cols()))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = cosine(a.row(i), na[i], b.row(j), nb[j]);
  }
  return out;
}

std::vector<double> max_cosine(const Matrix& a, const Matrix& b, double empty_value) {
  const auto na = row_norms(a);
  const auto nb = row_norms(b);
  std::vector<double> out(a.rows());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (worth_parallel(a.rows(), b.rows() * a.cols()))
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = max_cosine_row(a.row(i), na[i], b, nb, empty_value);
  return out;
}

void assign_nearest(const Matrix& points, const Matrix& centers, std::span<int> assignment,
                    std::span<double> sq_dist) {
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
#pragma omp parallel for schedule(static) if (worth_parallel(points.rows(), centers.rows() * points.cols()))
  for (std::ptrdiff_t i = 0; i < n; ++i) nearest_one(points.row(i), centers, assignment[i], sq_dist[i]);
}

void softmin_rows(const Matrix& cost, std::span<const double> g, double eps, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(cost.rows());
#pragma omp parallel for schedule(static) if (worth_parallel(cost.rows(), 2 * cost.cols()))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = softmin(cost.cols(), g, eps, [&](std::size_t j) { return cost(i, j); });
  }
}

void softmin_cols(const Matrix& cost, std::span<const double> f, double eps, std::span<double> out) {
  const auto m = static_cast<std::ptrdiff_t>(cost.cols());
#pragma omp parallel for schedule(static) if (worth_parallel(cost.cols(), 2 * cost.rows()))
  for (std::ptrdiff_t j = 0; j < m; ++j) {
    out[j] = softmin(cost.rows(), f, eps, [&](std::size_t i) { return cost(i, j); });
  }
}

}  // namespace omp

}  // namespace partprompt::kernels
