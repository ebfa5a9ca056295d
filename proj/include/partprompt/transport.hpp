#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "partprompt/feature.hpp"

namespace partprompt {

/// Non-negative coupling with prescribed marginals (both summing to 1).
struct TransportPlan {
  Matrix mass;
  std::vector<double> row_marginals;
  std::vector<double> col_marginals;
};

struct ExactTransport {
  double cost = 0.0;
  TransportPlan plan;
  std::size_t pivots = 0;
};

/// Solves min sum T_ij C_ij over plans whose row sums are supply_i / total and
/// column sums demand_j / total, total = sum(supply) = sum(demand).
///
/// Transportation simplex: least-cost greedy start, spanning-tree basis,
/// block-search pricing, u/v potentials. Flows stay integral, so degenerate
/// pivots are detected exactly. Throws SolverFailure on unbalanced input or if
/// the pivot budget runs out.
ExactTransport solve_transport(const Matrix& cost, std::span<const std::int64_t> supply,
                               std::span<const std::int64_t> demand);

/// Uniform marginals u_i = 1/rows, v_j = 1/cols.
ExactTransport solve_uniform_transport(const Matrix& cost);

}  // namespace partprompt
