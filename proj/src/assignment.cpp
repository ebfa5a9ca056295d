#include "partprompt/assignment.hpp"

#include <limits>

#include "partprompt/errors.hpp"

namespace partprompt {

namespace {

// Rows <= cols. 1-based shortest augmenting path formulation.
std::vector<int> hungarian_rows_le_cols(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  }
  return row_to_col;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

}  // namespace

Assignment solve_assignment(const Matrix& cost) {
  if (cost.rows() == 0 || cost.cols() == 0) throw Error(ErrorKind::InvalidArgument, "empty assignment matrix");
  Assignment out;
  if (cost.rows() <= cost.cols()) {
    out.row_to_col = hungarian_rows_le_cols(cost);
  } else {
    const auto col_to_row = hungarian_rows_le_cols(transpose(cost));
    out.row_to_col.assign(cost.rows(), -1);
    for (std::size_t j = 0; j < col_to_row.size(); ++j) out.row_to_col[col_to_row[j]] = static_cast<int>(j);
  }
  for (std::size_t i = 0; i < out.row_to_col.size(); ++i) {
    if (out.row_to_col[i] < 0) continue;
    out.total += cost(i, static_cast<std::size_t>(out.row_to_col[i]));
    ++out.matched;
  }
  return out;
}

}  // namespace partprompt
