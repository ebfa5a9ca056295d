#include <doctest.h>

#include <omp.h>

#include "partprompt/kernels.hpp"
#include "support.hpp"

using namespace partprompt;
namespace k = partprompt::kernels;

TEST_SUITE("kernels") {
  TEST_CASE("cosine special cases") {
    const std::vector<double> a{1, 2, 3}, neg{-1, -2, -3}, ortho{3, 0, -1}, zero{0, 0, 0};
    auto cos = [](const std::vector<double>& x, const std::vector<double>& y) {
      return k::cosine(x, std::sqrt(k::dot(x, x)), y, std::sqrt(k::dot(y, y)));
    };
    CHECK(cos(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cos(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(cos(a, ortho) == 0.0);
    CHECK(cos(a, zero) == 0.0);
  }

  // Shapes large enough to cross the parallel grain, odd sizes for remainders.
  TEST_CASE("omp kernels match the serial reference bit for bit") {
    const int saved = omp_get_max_threads();
    for (int threads : {1, 2, 4}) {
      omp_set_num_threads(threads);
      for (auto [n, m, d] : {std::array<std::size_t, 3>{7, 5, 3}, std::array<std::size_t, 3>{513, 129, 17}}) {
        const auto a = support::random_matrix(n, d, 11 + n);
        const auto b = support::random_matrix(m, d, 29 + m);
        CHECK(k::serial::row_norms(a) == k::omp::row_norms(a));
        CHECK(k::serial::cosine_matrix(a, b) == k::omp::cosine_matrix(a, b));
        CHECK(k::serial::max_cosine(a, b, -1.0) == k::omp::max_cosine(a, b, -1.0));
        CHECK(k::serial::max_cosine(a, Matrix(0, d), -1.0) == std::vector<double>(n, -1.0));

        std::vector<int> sa(n), oa(n);
        std::vector<double> sd(n), od(n);
        k::serial::assign_nearest(a, b, sa, sd);
        k::omp::assign_nearest(a, b, oa, od);
        CHECK(sa == oa);
        CHECK(sd == od);

        const auto cost = k::serial::cosine_matrix(a, b);
        std::vector<double> g(m, 0.1), f(n, -0.2), rs(n), ro(n), cs(m), co(m);
        k::serial::softmin_rows(cost, g, 0.03, rs);
        k::omp::softmin_rows(cost, g, 0.03, ro);
        k::serial::softmin_cols(cost, f, 0.03, cs);
        k::omp::softmin_cols(cost, f, 0.03, co);
        CHECK(rs == ro);
        CHECK(cs == co);
      }
    }
    omp_set_num_threads(saved);
  }

  TEST_CASE("assign_nearest breaks ties toward the lowest index") {
    const Matrix pts(1, 1, std::vector<double>{0.0});
    const Matrix centers(3, 1, std::vector<double>{1.0, -1.0, 1.0});
    std::vector<int> a(1);
    std::vector<double> d(1);
    k::omp::assign_nearest(pts, centers, a, d);
    CHECK(a[0] == 0);
    CHECK(d[0] == 1.0);
  }

  TEST_CASE("softmin approaches the hard minimum") {
    const Matrix c(1, 3, std::vector<double>{0.5, 0.2, 0.9});
    std::vector<double> g(3, 0.0), out(1);
    k::serial::softmin_rows(c, g, 1e-4, out);
    CHECK(out[0] == doctest::Approx(0.2).epsilon(1e-6));
  }
}
