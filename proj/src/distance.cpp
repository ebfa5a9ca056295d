#include "partprompt/distance.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "partprompt/assignment.hpp"
#include "partprompt/clustering.hpp"
#include "partprompt/errors.hpp"
#include "partprompt/kernels.hpp"

namespace partprompt {

std::string_view to_string(Measure measure) {
  switch (measure) {
    case Measure::WassersteinExact: return "wasserstein_exact";
    case Measure::Sinkhorn: return "sinkhorn";
    case Measure::JsTwoPc: return "js_2pc";
    case Measure::Hungarian: return "hungarian";
  }
  return "unknown";
}

Measure parse_measure(std::string_view text) {
  if (text == "wasserstein_exact" || text == "wasserstein") return Measure::WassersteinExact;
  if (text == "sinkhorn") return Measure::Sinkhorn;
  if (text == "js_2pc" || text == "js") return Measure::JsTwoPc;
  if (text == "hungarian") return Measure::Hungarian;
  throw Error(ErrorKind::InvalidArgument,
              "unknown measure '" + std::string(text) + "' (wasserstein|sinkhorn|js|hungarian)");
}

nlohmann::ordered_json to_json(const DistanceResult& r) {
  nlohmann::ordered_json meta;
  meta["size_a"] = r.meta.size_a;
  meta["size_b"] = r.meta.size_b;
  meta["iterations"] = r.meta.iterations;
  meta["converged"] = r.meta.converged;
  if (r.measure == Measure::Hungarian) meta["parts"] = r.meta.parts;
  if (r.measure == Measure::JsTwoPc) meta["bins"] = r.meta.bins;
  if (r.measure == Measure::Sinkhorn) meta["epsilon"] = r.meta.epsilon;

  nlohmann::ordered_json j;
  j["measure"] = to_string(r.measure);
  if (std::isfinite(r.value)) {
    j["value"] = r.value;
  } else {
    j["value"] = nullptr;
  }
  j["meta"] = std::move(meta);
  return j;
}

Matrix cost_matrix(const FeatureSet& a, const FeatureSet& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::DimMismatch, "feature dims " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  Matrix c = kernels::omp::cosine_matrix(a.vectors, b.vectors);
  for (double& v : c.values()) v = 1.0 - v;
  return c;
}

FeatureSet subsample(const FeatureSet& set, std::size_t cap, RngSeed seed) {
  if (set.count() <= cap) return set;
  Rng rng = make_rng(seed);
  std::vector<std::size_t> idx(set.count());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + uniform_index(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());

  FeatureSet out;
  out.vectors = Matrix(cap, set.dim());
  for (std::size_t r = 0; r < cap; ++r) {
    auto src = set.vectors.row(idx[r]);
    std::copy(src.begin(), src.end(), out.vectors.row(r).begin());
    out.origins.push_back(set.origins.empty() ? GridPoint{} : set.origins[idx[r]]);
  }
  return out;
}

namespace {

void require_nonempty(const FeatureSet& a, const FeatureSet& b) {
  if (a.count() == 0 || b.count() == 0) throw Error(ErrorKind::EmptySelection, "distance between empty feature sets");
}

}  // namespace

DistanceResult wasserstein_exact(const FeatureSet& a, const FeatureSet& b, std::size_t cap, RngSeed seed) {
  require_nonempty(a, b);
  if (cap < 2) throw Error(ErrorKind::InvalidArgument, "subsample cap must be >= 2");
  const auto sa = subsample(a, cap, derive_seed(seed, {0xA}));
  const auto sb = subsample(b, cap, derive_seed(seed, {0xB}));
  const auto solved = solve_uniform_transport(cost_matrix(sa, sb));

  DistanceResult r;
  r.measure = Measure::WassersteinExact;
  r.value = std::max(0.0, solved.cost);
  r.meta.size_a = sa.count();
  r.meta.size_b = sb.count();
  r.meta.iterations = solved.pivots;
  return r;
}

namespace {

// Sinkhorn sweeps at one epsilon, warm-started from (f, g). Returns the sweep
// count; `violation` holds the last row-marginal error.
std::size_t sinkhorn_sweeps(const Matrix& cost, double epsilon, std::size_t max_iter, double tol,
                            std::vector<double>& f, std::vector<double>& g, double& violation) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  const double a = 1.0 / static_cast<double>(n);
  std::vector<double> s(n), t(m);
  violation = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it <= max_iter; ++it) {
    kernels::omp::softmin_rows(cost, g, epsilon, s);
    if (it > 0) {
      // Columns are exact after each sweep; row sums are exp((f_i - s_i) / eps).
      violation = 0.0;
      for (std::size_t i = 0; i < n; ++i) violation = std::max(violation, std::abs(std::exp((f[i] - s[i]) / epsilon) - a));
      if (violation < tol || it == max_iter) return it;
    }
    for (std::size_t i = 0; i < n; ++i) f[i] = s[i] + epsilon * log_a;
    kernels::omp::softmin_cols(cost, f, epsilon, t);
    for (std::size_t j = 0; j < m; ++j) g[j] = t[j] + epsilon * log_b;
  }
  return max_iter;
}

constexpr std::size_t kNewtonLimit = 512;  // n + m above this stays on plain sweeps

double max_violation(const Matrix& cost, double epsilon, const std::vector<double>& f, const std::vector<double>& g,
                     double a, double b, Matrix& p, std::vector<double>& rows, std::vector<double>& cols) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  std::fill(rows.begin(), rows.end(), 0.0);
  std::fill(cols.begin(), cols.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      p(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / epsilon);
      rows[i] += p(i, j);
      cols[j] += p(i, j);
    }
  }
  double v = 0.0;
  for (double r : rows) v = std::max(v, std::abs(r - a));
  for (double c : cols) v = std::max(v, std::abs(c - b));
  return v;
}

// Newton steps on the dual with g[m-1] pinned. Sweeps slow to a crawl when
// the kernel is close to block diagonal; Newton does not.
std::size_t newton_polish(const Matrix& cost, double epsilon, std::size_t max_steps, double tol, std::vector<double>& f,
                          std::vector<double>& g, double& violation) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  const double a = 1.0 / static_cast<double>(n);
  const double b = 1.0 / static_cast<double>(m);
  const auto dim = static_cast<Eigen::Index>(n + m - 1);
  Matrix p(n, m);
  std::vector<double> rows(n), cols(m);
  violation = max_violation(cost, epsilon, f, g, a, b, p, rows, cols);
  std::size_t steps = 0;
  while (violation >= tol && steps < max_steps) {
    ++steps;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd grad(dim);
    for (std::size_t i = 0; i < n; ++i) {
      h(i, i) = rows[i];
      grad(i) = a - rows[i];
      for (std::size_t j = 0; j + 1 < m; ++j) {
        h(i, n + j) = p(i, j);
        h(n + j, i) = p(i, j);
      }
    }
    for (std::size_t j = 0; j + 1 < m; ++j) {
      h(n + j, n + j) = cols[j];
      grad(n + j) = b - cols[j];
    }
    const Eigen::VectorXd step = epsilon * h.ldlt().solve(grad);
    if (!step.allFinite()) break;

    const auto f0 = f;
    const auto g0 = g;
    bool accepted = false;
    for (double t = 1.0; t > 1e-6; t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) f[i] = f0[i] + t * step(i);
      for (std::size_t j = 0; j + 1 < m; ++j) g[j] = g0[j] + t * step(n + j);
      const double v = max_violation(cost, epsilon, f, g, a, b, p, rows, cols);
      if (v < violation) {
        violation = v;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      f = f0;
      g = g0;
      violation = max_violation(cost, epsilon, f, g, a, b, p, rows, cols);
      break;
    }
  }
  return steps;
}

// Projects a nearly feasible plan onto the exact marginals: scale down
// overfull rows, then overfull columns, then spread the deficit.
void round_to_marginals(Matrix& p, double a, double b) {
  const std::size_t n = p.rows();
  const std::size_t m = p.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j) r += p(i, j);
    if (r > a) for (std::size_t j = 0; j < m; ++j) p(i, j) *= a / r;
  }
  for (std::size_t j = 0; j < m; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += p(i, j);
    if (c > b) for (std::size_t i = 0; i < n; ++i) p(i, j) *= b / c;
  }
  std::vector<double> er(n), ec(m);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j) r += p(i, j);
    er[i] = std::max(0.0, a - r);
    total += er[i];
  }
  for (std::size_t j = 0; j < m; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += p(i, j);
    ec[j] = std::max(0.0, b - c);
  }
  if (total <= 0.0) return;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) p(i, j) += er[i] * ec[j] / total;
}

}  // namespace

SinkhornPlan sinkhorn(const Matrix& cost, double epsilon, std::size_t max_iter, double tol) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "sinkhorn epsilon must be > 0");
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  if (n == 0 || m == 0) throw Error(ErrorKind::InvalidArgument, "empty cost matrix");
  const double a = 1.0 / static_cast<double>(n);
  const double b = 1.0 / static_cast<double>(m);

  // Warm start by halving epsilon from the cost range down to the target.
  double c_max = 0.0;
  for (double v : cost.values()) c_max = std::max(c_max, std::abs(v));
  std::vector<double> f(n, 0.0), g(m, 0.0);
  SinkhornPlan out;
  double violation = 0.0;
  for (double e = c_max; e > 2.0 * epsilon && out.iterations < max_iter; e *= 0.5) {
    const std::size_t budget = std::min<std::size_t>(max_iter - out.iterations, 200);
    out.iterations += sinkhorn_sweeps(cost, e, budget, std::max(tol, 1e-4), f, g, violation);
  }
  if (n + m <= kNewtonLimit) {
    const std::size_t budget = std::min<std::size_t>(max_iter - out.iterations, 5000);
    out.iterations += sinkhorn_sweeps(cost, epsilon, budget, std::max(tol, 1e-7), f, g, violation);
    if (violation >= tol) out.iterations += newton_polish(cost, epsilon, max_iter - out.iterations, tol, f, g, violation);
  }
  if (violation >= tol && out.iterations < max_iter) {
    out.iterations += sinkhorn_sweeps(cost, epsilon, max_iter - out.iterations, tol, f, g, violation);
  }
  out.marginal_violation = violation;
  out.converged = violation < tol;

  out.plan.mass = Matrix(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.plan.mass(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / epsilon);
  round_to_marginals(out.plan.mass, a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) total += out.plan.mass(i, j) * cost(i, j);
  out.transport_cost = total;
  out.plan.row_marginals.assign(n, a);
  out.plan.col_marginals.assign(m, b);
  return out;
}

DistanceResult wasserstein_sinkhorn(const FeatureSet& a, const FeatureSet& b, double epsilon, std::size_t max_iter,
                                    double tol) {
  require_nonempty(a, b);
  const auto solved = sinkhorn(cost_matrix(a, b), epsilon, max_iter, tol);
  DistanceResult r;
  r.measure = Measure::Sinkhorn;
  r.value = std::max(0.0, solved.transport_cost);
  r.meta.size_a = a.count();
  r.meta.size_b = b.count();
  r.meta.iterations = solved.iterations;
  r.meta.converged = solved.converged;
  r.meta.epsilon = epsilon;
  return r;
}

std::array<double, 2> Projection2::project(std::span<const double> x) const {
  std::array<double, 2> out{};
  for (std::size_t c = 0; c < 2; ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - mean[k]) * basis[c][k];
    out[c] = s;
  }
  return out;
}

Projection2 pca_top2(const FeatureSet& x) {
  if (x.count() < 2) throw Error(ErrorKind::DegenerateData, "PCA needs at least 2 vectors");
  const std::size_t n = x.count();
  const std::size_t d = x.dim();

  Eigen::MatrixXd data(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) data(i, k) = x.vectors(i, k);
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.adjoint() * centered) / static_cast<double>(n - 1);

  const double scale = std::max(1.0, data.rowwise().squaredNorm().mean());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::DegenerateData, "covariance eigen-solve failed");
  const auto& evals = solver.eigenvalues();  // ascending
  if (evals(static_cast<Eigen::Index>(d - 1)) <= 1e-18 * scale) {
    throw Error(ErrorKind::DegenerateData, "covariance has rank 0 (all vectors coincide)");
  }

  Projection2 p;
  p.mean.assign(mean.data(), mean.data() + d);
  for (std::size_t c = 0; c < 2; ++c) {
    p.basis[c].assign(d, 0.0);
    if (c >= d) continue;
    const auto col = static_cast<Eigen::Index>(d - 1 - c);
    p.eigenvalues[c] = std::max(0.0, evals(col));
    for (std::size_t k = 0; k < d; ++k) p.basis[c][k] = solver.eigenvectors()(static_cast<Eigen::Index>(k), col);
    for (double v : p.basis[c]) {
      if (std::abs(v) > 1e-12) {
        if (v < 0) {
          for (double& w : p.basis[c]) w = -w;
        }
        break;
      }
    }
  }
  return p;
}

double js_divergence(std::span<const double> counts_p, std::span<const double> counts_q, double smoothing) {
  if (counts_p.size() != counts_q.size()) throw Error(ErrorKind::DimMismatch, "histogram sizes differ");
  const double bins = static_cast<double>(counts_p.size());
  const double total_p = std::accumulate(counts_p.begin(), counts_p.end(), 0.0) + smoothing * bins;
  const double total_q = std::accumulate(counts_q.begin(), counts_q.end(), 0.0) + smoothing * bins;
  double js = 0.0;
  for (std::size_t k = 0; k < counts_p.size(); ++k) {
    const double p = (counts_p[k] + smoothing) / total_p;
    const double q = (counts_q[k] + smoothing) / total_q;
    const double m = 0.5 * (p + q);
    if (p > 0) js += 0.5 * p * std::log2(p / m);
    if (q > 0) js += 0.5 * q * std::log2(q / m);
  }
  return std::clamp(js, 0.0, 1.0);
}

DistanceResult js_divergence_2pc(const FeatureSet& a, const FeatureSet& b, std::size_t bins) {
  require_nonempty(a, b);
  if (bins < 2) throw Error(ErrorKind::InvalidArgument, "js bins must be >= 2");
  if (a.dim() != b.dim()) throw Error(ErrorKind::DimMismatch, "feature dims differ");
  const auto proj = pca_top2(a);

  std::vector<std::array<double, 2>> pa, pb;
  for (std::size_t i = 0; i < a.count(); ++i) pa.push_back(proj.project(a.vectors.row(i)));
  for (std::size_t i = 0; i < b.count(); ++i) pb.push_back(proj.project(b.vectors.row(i)));

  std::array<double, 2> lo{pa[0][0], pa[0][1]}, hi = lo;
  for (const auto* set : {&pa, &pb}) {
    for (const auto& p : *set) {
      for (std::size_t c = 0; c < 2; ++c) {
        lo[c] = std::min(lo[c], p[c]);
        hi[c] = std::max(hi[c], p[c]);
      }
    }
  }
  auto bin_of = [&](double v, std::size_t c) -> std::size_t {
    const double range = hi[c] - lo[c];
    if (!(range > 0.0)) return 0;
    const auto k = static_cast<std::size_t>(std::floor((v - lo[c]) / range * static_cast<double>(bins)));
    return std::min(k, bins - 1);
  };
  auto histogram = [&](const std::vector<std::array<double, 2>>& pts) {
    std::vector<double> h(bins * bins, 0.0);
    for (const auto& p : pts) h[bin_of(p[0], 0) * bins + bin_of(p[1], 1)] += 1.0;
    return h;
  };

  DistanceResult r;
  r.measure = Measure::JsTwoPc;
  r.value = js_divergence(histogram(pa), histogram(pb), 1e-9);
  r.meta.size_a = a.count();
  r.meta.size_b = b.count();
  r.meta.bins = bins;
  return r;
}

DistanceResult hungarian_part_distance(const FeatureSet& a, const FeatureSet& b, std::size_t k, RngSeed seed) {
  require_nonempty(a, b);
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "hungarian part count must be >= 1");
  if (a.dim() != b.dim()) throw Error(ErrorKind::DimMismatch, "feature dims differ");
  const std::size_t parts = std::min({k, a.count(), b.count()});
  const auto pa = cluster_parts(a, parts, seed);
  const auto pb = cluster_parts(b, parts, seed);

  Matrix cost = kernels::omp::cosine_matrix(pa.means, pb.means);
  for (double& v : cost.values()) v = 1.0 - v;
  const auto match = solve_assignment(cost);

  DistanceResult r;
  r.measure = Measure::Hungarian;
  r.value = std::max(0.0, match.total / static_cast<double>(match.matched));
  r.meta.size_a = a.count();
  r.meta.size_b = b.count();
  r.meta.parts = match.matched;
  return r;
}

DistanceResult measure_distance(const FeatureSet& a, const FeatureSet& b, const DistanceOptions& options) {
  switch (options.measure) {
    case Measure::WassersteinExact: return wasserstein_exact(a, b, options.cap, options.seed);
    case Measure::Sinkhorn: {
      const auto sa = subsample(a, options.cap, derive_seed(options.seed, {0xA}));
      const auto sb = subsample(b, options.cap, derive_seed(options.seed, {0xB}));
      return wasserstein_sinkhorn(sa, sb, options.sinkhorn_epsilon, options.sinkhorn_max_iter, options.sinkhorn_tol);
    }
    case Measure::JsTwoPc: return js_divergence_2pc(a, b, options.js_bins);
    case Measure::Hungarian: return hungarian_part_distance(a, b, options.hungarian_parts, options.seed);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown measure");
}

}  // namespace partprompt
