#pragma once

#include <span>
#include <vector>

#include "partprompt/feature.hpp"

// Data-parallel inner loops. Each kernel exists twice: a plain serial reference
// (kernels::serial) and an OpenMP version (kernels::omp). Per-element arithmetic
// is identical in both, so their outputs agree bit for bit regardless of thread
// count; reductions that would reorder floating-point sums stay out of here.
namespace partprompt::kernels {

inline constexpr double kCosineEps = 1e-12;

/// cos(a, b) = a.b / (|a||b| + 1e-12), clamped to [-1, 1]. Zero vectors give 0.
double cosine(std::span<const double> a, double norm_a, std::span<const double> b, double norm_b);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

namespace serial {

std::vector<double> row_norms(const Matrix& a);

/// out(i, j) = cosine(a_i, b_j); shape a.rows() x b.rows().
Matrix cosine_matrix(const Matrix& a, const Matrix& b);

/// out[i] = max_j cosine(a_i, b_j), or `empty_value` when b has no rows.
std::vector<double> max_cosine(const Matrix& a, const Matrix& b, double empty_value);

/// Nearest center by squared Euclidean distance; ties go to the lowest index.
void assign_nearest(const Matrix& points, const Matrix& centers, std::span<int> assignment,
                    std::span<double> sq_dist);

/// out[i] = -eps * log sum_j exp((g[j] - C(i, j)) / eps), stabilized.
void softmin_rows(const Matrix& cost, std::span<const double> g, double eps, std::span<double> out);

/// out[j] = -eps * log sum_i exp((f[i] - C(i, j)) / eps), stabilized.
void softmin_cols(const Matrix& cost, std::span<const double> f, double eps, std::span<double> out);

}  // namespace serial

namespace omp {

std::vector<double> row_norms(const Matrix& a);
Matrix cosine_matrix(const Matrix& a, const Matrix& b);
std::vector<double> max_cosine(const Matrix& a, const Matrix& b, double empty_value);
void assign_nearest(const Matrix& points, const Matrix& centers, std::span<int> assignment,
                    std::span<double> sq_dist);
void softmin_rows(const Matrix& cost, std::span<const double> g, double eps, std::span<double> out);
void softmin_cols(const Matrix& cost, std::span<const double> f, double eps, std::span<double> out);

}  // namespace omp

}  // namespace partprompt::kernels
