#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "partprompt/clustering.hpp"
#include "partprompt/distance.hpp"
#include "partprompt/errors.hpp"
#include "support.hpp"

using namespace partprompt;

namespace {

FeatureSet set_of(std::vector<std::vector<double>> rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return support::as_set(std::move(m));
}

double mean_cost(const Matrix& c) {
  return std::accumulate(c.values().begin(), c.values().end(), 0.0) / static_cast<double>(c.values().size());
}

}  // namespace

TEST_SUITE("distance") {
  TEST_CASE("cost matrix values") {
    const auto a = set_of({{1, 2, 3}});
    const auto b = set_of({{1, 2, 3}, {3, 0, -1}, {-1, -2, -3}});
    const auto c = cost_matrix(a, b);
    CHECK(c(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c(0, 1) == 1.0);
    CHECK(c(0, 2) == doctest::Approx(2.0).epsilon(1e-12));
  }

  TEST_CASE("measure names") {
    CHECK(parse_measure("wasserstein") == Measure::WassersteinExact);
    CHECK(parse_measure("js") == Measure::JsTwoPc);
    for (auto m : {Measure::WassersteinExact, Measure::Sinkhorn, Measure::JsTwoPc, Measure::Hungarian}) {
      CHECK(parse_measure(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_measure("emd"), Error);
  }

  TEST_CASE("exact wasserstein: identity, singletons, symmetry, oracle") {
    const auto a = support::as_set(support::random_matrix(6, 4, 1));
    CHECK(wasserstein_exact(a, a).value <= 1e-9);
    const auto x = set_of({{1, 0.5}});
    const auto y = set_of({{-0.2, 1}});
    CHECK(wasserstein_exact(x, y).value == doctest::Approx(oracle::cosine_distance({1, 0.5}, {-0.2, 1})).epsilon(1e-12));

    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto p = support::as_set(support::random_matrix(2 + s % 3, 3, 40 + s));
      const auto q = support::as_set(support::random_matrix(2 + s % 3, 3, 80 + s));
      const double pq = wasserstein_exact(p, q).value;
      CHECK(pq >= 0.0);
      CHECK(std::abs(pq - wasserstein_exact(q, p).value) <= 1e-9);
      CHECK(std::abs(pq - oracle::transport_by_vertices(cost_matrix(p, q))) <= 1e-9);
    }
    const auto r = support::as_set(support::random_matrix(2, 3, 7));
    const auto t = support::as_set(support::random_matrix(3, 3, 8));
    CHECK(wasserstein_exact(r, t).value ==
          doctest::Approx(oracle::transport_by_vertices(cost_matrix(r, t))).epsilon(1e-12));
  }

  TEST_CASE("subsample is seeded, ordered and capped") {
    const auto a = support::as_set(support::random_matrix(50, 2, 3));
    const auto s1 = subsample(a, 10, RngSeed{4});
    const auto s2 = subsample(a, 10, RngSeed{4});
    CHECK(s1.count() == 10);
    CHECK(s1.vectors == s2.vectors);
    for (std::size_t i = 1; i < 10; ++i) CHECK(s1.origins[i - 1].col < s1.origins[i].col);
    CHECK(subsample(a, 100, RngSeed{4}).count() == 50);
    const auto big = wasserstein_exact(a, a, 8, RngSeed{1});
    CHECK(big.meta.size_a == 8);
  }

  TEST_CASE("sinkhorn") {
    const auto a = support::as_set(support::random_matrix(5, 3, 10));
    CHECK(wasserstein_sinkhorn(a, a, 0.01).value > 1e-6);
    CHECK(wasserstein_sinkhorn(a, a, 1e-5).value <= 1e-6);
    const auto x = set_of({{1, 2}});
    const auto y = set_of({{2, -1}});
    CHECK(wasserstein_sinkhorn(x, y, 5.0).value == doctest::Approx(1.0).epsilon(1e-12));

    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto p = support::as_set(support::random_matrix(4, 3, 200 + s));
      const auto q = support::as_set(support::random_matrix(4, 3, 300 + s));
      const auto c = cost_matrix(p, q);
      const double exact = wasserstein_exact(p, q).value;
      const auto sk = sinkhorn(c, 0.01 * mean_cost(c), 100000, 1e-10);
      CHECK(sk.transport_cost >= exact - 1e-9);
      CHECK(std::abs(sk.transport_cost - exact) <= 0.05);
    }
  }

  TEST_CASE("sinkhorn plan marginals and monotone approach") {
    const auto p = support::as_set(support::random_matrix(8, 4, 61));
    const auto q = support::as_set(support::random_matrix(8, 4, 62));
    const auto c = cost_matrix(p, q);
    const double exact = wasserstein_exact(p, q).value;
    double previous = 1e300;
    for (double f : {0.5, 0.1, 0.02}) {
      const auto sk = sinkhorn(c, f * mean_cost(c), 100000, 1e-10);
      if (f > 0.05) CHECK(sk.converged);
      CHECK(sk.converged == (sk.marginal_violation < 1e-10));
      // Rounded onto the exact marginals whether or not it converged.
      for (std::size_t i = 0; i < 8; ++i) {
        double row = 0, col = 0;
        for (std::size_t j = 0; j < 8; ++j) {
          row += sk.plan.mass(i, j);
          col += sk.plan.mass(j, i);
          CHECK(sk.plan.mass(i, j) >= 0.0);
        }
        CHECK(std::abs(row - 0.125) <= 1e-12);
        CHECK(std::abs(col - 0.125) <= 1e-12);
      }
      CHECK(sk.transport_cost >= exact - 1e-9);
      CHECK(sk.transport_cost - exact <= previous);
      previous = sk.transport_cost - exact;
    }
  }

  TEST_CASE("pca_top2") {
    const auto line = set_of({{0, 0, 0}, {1, 0, 0}, {3, 0, 0}, {-2, 0, 0}});
    const auto p = pca_top2(line);
    CHECK(p.basis[0][0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-12));

    const auto plane = set_of({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
    const auto q = pca_top2(plane);
    CHECK(q.eigenvalues[0] == doctest::Approx(q.eigenvalues[1]));
    const double det = q.basis[0][0] * q.basis[1][1] - q.basis[0][1] * q.basis[1][0];
    CHECK(std::abs(det) == doctest::Approx(1.0).epsilon(1e-12));

    // Three points in 3-D: covariance eigen-solve in the plane they span.
    // Points lie in the plane spanned by e = (1,1,0)/sqrt2 and f = (0,0,1);
    // in (e, f) coordinates they are (0,0), (2,0), (1,3).
    const double r2 = std::sqrt(2.0);
    const auto tri = set_of({{0, 0, 0}, {2 / r2, 2 / r2, 0}, {1 / r2, 1 / r2, 3}});
    const auto t = pca_top2(tri);
    // In-plane covariance: mean (1,1), centered (-1,-1),(1,-1),(0,2) -> [[1, 0], [0, 3]].
    CHECK(t.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(t.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(t.basis[0][2]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(t.basis[1][0]) == doctest::Approx(1 / r2).epsilon(1e-12));
    CHECK(t.basis[1][0] > 0);

    CHECK_THROWS_AS(pca_top2(set_of({{1, 1}, {1, 1}})), Error);
    CHECK_THROWS_AS(pca_top2(set_of({{1, 1}})), Error);
  }

  TEST_CASE("js divergence") {
    const auto a = support::as_set(support::random_matrix(20, 3, 5));
    CHECK(js_divergence_2pc(a, a).value <= 1e-9);
    const auto near = set_of({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    const auto far = set_of({{10, 10}, {11, 10}, {10, 11}, {11, 11}});
    CHECK(std::abs(js_divergence_2pc(near, far).value - 1.0) <= 1e-6);

    const double p[] = {1, 0, 3};
    const double q[] = {0, 2, 2};
    CHECK(js_divergence(p, q, 0.0) == doctest::Approx(oracle::js_base2({0.25, 0, 0.75}, {0, 0.5, 0.5})).epsilon(1e-14));
  }

  TEST_CASE("js on two 4-point sets with 2x2 bins matches a hand histogram") {
    // A projects onto its own first axis (x) and second axis (y); B falls into
    // the bins computed by hand below.
    const auto a = set_of({{-3, -1}, {-1, 1}, {1, 1}, {3, -1}});
    const auto b = set_of({{2, 0.5}, {2.5, 0.5}, {-2, 0.5}, {2, -0.5}});
    // PCA of A: mean 0, cov diag(20/3, 4/3) (no cross term), axes x then y.
    // Joint box x in [-3, 3], y in [-1, 1]; 2 bins split at 0.
    // A: (x<0,y<0) (x<0,y>=0) (x>=0,y<0) (x>=0,y>=0) -> [1, 1, 1, 1]
    // B: (x>=0,y>=0) x2, (x<0,y>=0), (x>=0,y<0)      -> [0, 1, 1, 2]
    const double s = 1e-9;
    std::vector<double> hp{1 + s, 1 + s, 1 + s, 1 + s}, hq{0 + s, 1 + s, 1 + s, 2 + s};
    for (double& v : hp) v /= 4 + 4 * s;
    for (double& v : hq) v /= 4 + 4 * s;
    CHECK(js_divergence_2pc(a, b, 2).value == doctest::Approx(oracle::js_base2(hp, hq)).epsilon(1e-12));
  }

  TEST_CASE("hungarian part distance") {
    const auto a = support::as_set(support::random_matrix(15, 4, 90));
    // Zero up to the cosine epsilon.
    CHECK(hungarian_part_distance(a, a, 4, RngSeed{1}).value <= 1e-9);

    const auto b = support::as_set(support::random_matrix(11, 4, 91));
    std::vector<double> ma(4, 0), mb(4, 0);
    for (std::size_t i = 0; i < 15; ++i) for (std::size_t j = 0; j < 4; ++j) ma[j] += a.vectors(i, j) / 15;
    for (std::size_t i = 0; i < 11; ++i) for (std::size_t j = 0; j < 4; ++j) mb[j] += b.vectors(i, j) / 11;
    CHECK(hungarian_part_distance(a, b, 1, RngSeed{1}).value == doctest::Approx(oracle::cosine_distance(ma, mb)).epsilon(1e-9));

    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto p = support::as_set(support::random_matrix(12, 3, 700 + s));
      const auto q = support::as_set(support::random_matrix(9, 3, 800 + s));
      const auto pp = cluster_parts(p, 3, RngSeed{s});
      const auto pq = cluster_parts(q, 3, RngSeed{s});
      const double want = oracle::assignment_by_permutations(cost_matrix(support::as_set(pp.means), support::as_set(pq.means))) / 3;
      CHECK(std::abs(hungarian_part_distance(p, q, 3, RngSeed{s}).value - want) <= 1e-12);
    }
  }

  TEST_CASE("hungarian is invariant to input order") {
    const auto a = support::random_matrix(10, 3, 1);
    Matrix rev(10, 3);
    for (std::size_t i = 0; i < 10; ++i) std::copy(a.row(9 - i).begin(), a.row(9 - i).end(), rev.row(i).begin());
    const auto b = support::as_set(support::random_matrix(8, 3, 2));
    CHECK(hungarian_part_distance(support::as_set(a), b, 2, RngSeed{3}).value ==
          doctest::Approx(hungarian_part_distance(support::as_set(rev), b, 2, RngSeed{3}).value).epsilon(1e-12));
  }

  TEST_CASE("measure_distance dispatch and JSON") {
    const auto a = support::as_set(support::random_matrix(9, 3, 31));
    const auto b = support::as_set(support::random_matrix(7, 3, 32));
    DistanceOptions o;
    for (auto m : {Measure::WassersteinExact, Measure::Sinkhorn, Measure::JsTwoPc, Measure::Hungarian}) {
      o.measure = m;
      const auto r = measure_distance(a, b, o);
      CHECK(r.measure == m);
      CHECK(r.value >= 0.0);
      const auto j = to_json(r);
      CHECK(j["measure"] == std::string(to_string(m)));
    }
    DistanceResult inf;
    inf.value = std::numeric_limits<double>::infinity();
    CHECK(to_json(inf)["value"].is_null());
  }
}
