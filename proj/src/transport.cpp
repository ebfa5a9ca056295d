#include "partprompt/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "partprompt/errors.hpp"

namespace partprompt {

namespace {

struct Arc {
  int row;
  int col;
  std::int64_t flow;
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

class TransportSimplex {
 public:
  TransportSimplex(const Matrix& cost, std::span<const std::int64_t> supply, std::span<const std::int64_t> demand)
      : cost_(cost),
        n_(static_cast<int>(cost.rows())),
        m_(static_cast<int>(cost.cols())),
        adj_(static_cast<std::size_t>(n_ + m_)),
        potential_(static_cast<std::size_t>(n_ + m_)),
        parent_arc_(static_cast<std::size_t>(n_ + m_)),
        stamp_(static_cast<std::size_t>(n_ + m_), 0) {
    initial_basis(supply, demand);
    double max_cost = 0.0;
    for (double c : cost.values()) max_cost = std::max(max_cost, std::abs(c));
    tolerance_ = 1e-12 * std::max(1.0, max_cost);
  }

  std::size_t run() {
    const std::size_t cells = static_cast<std::size_t>(n_) * m_;
    const std::size_t budget = 1000 + 50 * cells;
    std::size_t pivots = 0;
    compute_potentials();
    while (true) {
      std::size_t entering = 0;
      if (!find_entering(entering)) return pivots;
      if (++pivots > budget) throw Error(ErrorKind::SolverFailure, "transport simplex exceeded pivot budget");
      pivot(static_cast<int>(entering / m_), static_cast<int>(entering % m_));
      compute_potentials();
    }
  }

  const std::vector<Arc>& arcs() const { return arcs_; }

 private:
  int col_node(int j) const { return n_ + j; }

  void add_arc(int i, int j, std::int64_t flow) {
    arcs_.push_back({i, j, flow});
    const int id = static_cast<int>(arcs_.size()) - 1;
    adj_[i].push_back(id);
    adj_[col_node(j)].push_back(id);
  }

  void initial_basis(std::span<const std::int64_t> supply, std::span<const std::int64_t> demand) {
    const std::size_t cells = static_cast<std::size_t>(n_) * m_;
    std::vector<std::size_t> order(cells);
    std::iota(order.begin(), order.end(), 0);
    const auto values = cost_.values();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<std::int64_t> rs(supply.begin(), supply.end());
    std::vector<std::int64_t> cs(demand.begin(), demand.end());
    DisjointSets sets(static_cast<std::size_t>(n_ + m_));
    const std::size_t tree_size = static_cast<std::size_t>(n_ + m_ - 1);
    arcs_.reserve(tree_size);

    // Each allocation exhausts a row or a column, so positive cells form a forest.
    for (std::size_t idx : order) {
      const int i = static_cast<int>(idx / m_);
      const int j = static_cast<int>(idx % m_);
      if (rs[i] == 0 || cs[j] == 0) continue;
      const std::int64_t x = std::min(rs[i], cs[j]);
      rs[i] -= x;
      cs[j] -= x;
      sets.unite(i, col_node(j));
      add_arc(i, j, x);
    }
    // Complete to a spanning tree with zero-flow cells.
    for (std::size_t idx : order) {
      if (arcs_.size() == tree_size) break;
      const int i = static_cast<int>(idx / m_);
      const int j = static_cast<int>(idx % m_);
      if (sets.unite(i, col_node(j))) add_arc(i, j, 0);
    }
    if (arcs_.size() != tree_size) throw Error(ErrorKind::SolverFailure, "could not build a spanning basis");
  }

  void compute_potentials() {
    ++epoch_;
    queue_.clear();
    queue_.push_back(0);
    potential_[0] = 0.0;
    stamp_[0] = epoch_;
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const int node = queue_[head];
      for (int id : adj_[node]) {
        const Arc& a = arcs_[id];
        const int other = node < n_ ? col_node(a.col) : a.row;
        if (stamp_[other] == epoch_) continue;
        stamp_[other] = epoch_;
        potential_[other] = cost_(a.row, a.col) - potential_[node];
        queue_.push_back(other);
      }
    }
  }

  double reduced_cost(std::size_t idx) const {
    const int i = static_cast<int>(idx / m_);
    const int j = static_cast<int>(idx % m_);
    return cost_.values()[idx] - potential_[i] - potential_[col_node(j)];
  }

  // Block search pricing: scan blocks cyclically, take the most negative
  // reduced cost of the first block that has one.
  bool find_entering(std::size_t& entering) {
    const std::size_t cells = static_cast<std::size_t>(n_) * m_;
    const std::size_t block = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(static_cast<double>(cells))));
    double best = -tolerance_;
    bool found = false;
    std::size_t scanned_in_block = 0;
    for (std::size_t scanned = 0; scanned < cells; ++scanned) {
      const std::size_t idx = next_;
      next_ = next_ + 1 == cells ? 0 : next_ + 1;
      const double rc = reduced_cost(idx);
      if (rc < best) {
        best = rc;
        entering = idx;
        found = true;
      }
      if (++scanned_in_block == block) {
        if (found) return true;
        scanned_in_block = 0;
      }
    }
    return found;
  }

  void pivot(int i, int j) {
    // Tree path from row node i to column node j.
    ++epoch_;
    queue_.clear();
    queue_.push_back(i);
    stamp_[i] = epoch_;
    parent_arc_[i] = -1;
    const int target = col_node(j);
    for (std::size_t head = 0; head < queue_.size() && stamp_[target] != epoch_; ++head) {
      const int node = queue_[head];
      for (int id : adj_[node]) {
        const Arc& a = arcs_[id];
        const int other = node < n_ ? col_node(a.col) : a.row;
        if (stamp_[other] == epoch_) continue;
        stamp_[other] = epoch_;
        parent_arc_[other] = id;
        queue_.push_back(other);
      }
    }

    // Walking back from j, arcs alternate -theta, +theta, ..., -theta.
    path_.clear();
    for (int node = target; node != i;) {
      const int id = parent_arc_[node];
      path_.push_back(id);
      const Arc& a = arcs_[id];
      node = node == a.row ? col_node(a.col) : a.row;
    }
    std::int64_t theta = -1;
    int leaving = -1;
    for (std::size_t k = 0; k < path_.size(); k += 2) {
      const std::int64_t f = arcs_[path_[k]].flow;
      if (theta < 0 || f < theta) {
        theta = f;
        leaving = path_[k];
      }
    }
    for (std::size_t k = 0; k < path_.size(); ++k) arcs_[path_[k]].flow += (k % 2 == 0) ? -theta : theta;

    Arc& out = arcs_[leaving];
    auto drop = [&](int node) {
      auto& list = adj_[node];
      list.erase(std::find(list.begin(), list.end(), leaving));
    };
    drop(out.row);
    drop(col_node(out.col));
    out = {i, j, theta};
    adj_[i].push_back(leaving);
    adj_[target].push_back(leaving);
  }

  const Matrix& cost_;
  int n_;
  int m_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adj_;
  std::vector<double> potential_;
  std::vector<int> parent_arc_;
  std::vector<unsigned> stamp_;
  unsigned epoch_ = 0;
  std::vector<int> queue_;
  std::vector<int> path_;
  std::size_t next_ = 0;
  double tolerance_ = 1e-12;
};

}  // namespace

ExactTransport solve_transport(const Matrix& cost, std::span<const std::int64_t> supply,
                               std::span<const std::int64_t> demand) {
  if (cost.rows() == 0 || cost.cols() == 0) throw Error(ErrorKind::InvalidArgument, "empty cost matrix");
  if (supply.size() != cost.rows() || demand.size() != cost.cols()) {
    throw Error(ErrorKind::DimMismatch, "marginal lengths do not match the cost matrix");
  }
  for (double c : cost.values()) {
    if (!std::isfinite(c)) throw Error(ErrorKind::InvalidArgument, "cost matrix has non-finite entries");
  }
  const std::int64_t total = std::accumulate(supply.begin(), supply.end(), std::int64_t{0});
  const std::int64_t total_demand = std::accumulate(demand.begin(), demand.end(), std::int64_t{0});
  const bool negative = std::any_of(supply.begin(), supply.end(), [](auto x) { return x < 0; }) ||
                        std::any_of(demand.begin(), demand.end(), [](auto x) { return x < 0; });
  if (total != total_demand || total <= 0 || negative) {
    throw Error(ErrorKind::SolverFailure, "infeasible marginals: supply " + std::to_string(total) + " vs demand " +
                                              std::to_string(total_demand));
  }

  TransportSimplex simplex(cost, supply, demand);
  ExactTransport out;
  out.pivots = simplex.run();

  const double scale = static_cast<double>(total);
  out.plan.mass = Matrix(cost.rows(), cost.cols());
  long double objective = 0.0L;
  for (const auto& a : simplex.arcs()) {
    if (a.flow == 0) continue;
    out.plan.mass(a.row, a.col) = static_cast<double>(a.flow) / scale;
    objective += static_cast<long double>(a.flow) * cost(a.row, a.col);
  }
  out.cost = static_cast<double>(objective / scale);
  for (auto s : supply) out.plan.row_marginals.push_back(static_cast<double>(s) / scale);
  for (auto d : demand) out.plan.col_marginals.push_back(static_cast<double>(d) / scale);
  return out;
}

ExactTransport solve_uniform_transport(const Matrix& cost) {
  const auto n = static_cast<std::int64_t>(cost.rows());
  const auto m = static_cast<std::int64_t>(cost.cols());
  if (n == 0 || m == 0) throw Error(ErrorKind::InvalidArgument, "empty cost matrix");
  const std::int64_t g = std::gcd(n, m);
  std::vector<std::int64_t> supply(static_cast<std::size_t>(n), m / g);
  std::vector<std::int64_t> demand(static_cast<std::size_t>(m), n / g);
  return solve_transport(cost, supply, demand);
}

}  // namespace partprompt
