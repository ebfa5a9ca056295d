#pragma once

#include <vector>

#include "partprompt/feature.hpp"

namespace partprompt {

struct Assignment {
  /// row_to_col[i] is the column matched to row i, or -1 when rows > cols and
  /// row i is left out.
  std::vector<int> row_to_col;
  double total = 0.0;
  std::size_t matched = 0;
};

/// Minimum-cost assignment on a rectangular matrix (Kuhn-Munkres with
/// potentials, O(min^2 * max)). Matches min(rows, cols) pairs.
Assignment solve_assignment(const Matrix& cost);

}  // namespace partprompt
