// Times the serial reference kernels against their OpenMP counterparts and
// checks that both produce identical output.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <omp.h>

#include "partprompt/kernels.hpp"
#include "partprompt/rng.hpp"

namespace pp = partprompt;
namespace k = partprompt::kernels;

namespace {

pp::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  pp::Rng rng = pp::make_rng(pp::RngSeed{seed});
  std::normal_distribution<double> g;
  pp::Matrix m(rows, cols);
  for (double& v : m.values()) v = g(rng);
  return m;
}

double time_ms(const std::function<void()>& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool report(const char* name, double serial_ms, double omp_ms, bool equal) {
  std::printf("%-16s serial %9.3f ms  omp %9.3f ms  speedup %5.2fx  %s\n", name, serial_ms, omp_ms,
              omp_ms > 0 ? serial_ms / omp_ms : 0.0, equal ? "identical" : "MISMATCH");
  return equal;
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  const std::size_t n = quick ? 256 : 4096;
  const std::size_t m = quick ? 64 : 1024;
  const std::size_t d = quick ? 16 : 64;
  const int reps = quick ? 1 : 5;
  std::printf("threads %d, points %zu, centers %zu, dim %zu\n", omp_get_max_threads(), n, m, d);

  const auto a = random_matrix(n, d, 1);
  const auto b = random_matrix(m, d, 2);
  bool ok = true;

  {
    pp::Matrix s, o;
    const double ts = time_ms([&] { s = k::serial::cosine_matrix(a, b); }, reps);
    const double to = time_ms([&] { o = k::omp::cosine_matrix(a, b); }, reps);
    ok &= report("cosine_matrix", ts, to, s == o);
  }
  {
    std::vector<double> s, o;
    const double ts = time_ms([&] { s = k::serial::max_cosine(a, b, -1.0); }, reps);
    const double to = time_ms([&] { o = k::omp::max_cosine(a, b, -1.0); }, reps);
    ok &= report("max_cosine", ts, to, s == o);
  }
  {
    std::vector<int> sa(n), oa(n);
    std::vector<double> sd(n), od(n);
    const double ts = time_ms([&] { k::serial::assign_nearest(a, b, sa, sd); }, reps);
    const double to = time_ms([&] { k::omp::assign_nearest(a, b, oa, od); }, reps);
    ok &= report("assign_nearest", ts, to, sa == oa && sd == od);
  }
  {
    const auto cost = k::serial::cosine_matrix(a, b);
    std::vector<double> g(m, 0.0), s(n), o(n);
    const double ts = time_ms([&] { k::serial::softmin_rows(cost, g, 0.05, s); }, reps);
    const double to = time_ms([&] { k::omp::softmin_rows(cost, g, 0.05, o); }, reps);
    ok &= report("softmin_rows", ts, to, s == o);
    std::vector<double> f(n, 0.0), sc(m), oc(m);
    const double tsc = time_ms([&] { k::serial::softmin_cols(cost, f, 0.05, sc); }, reps);
    const double toc = time_ms([&] { k::omp::softmin_cols(cost, f, 0.05, oc); }, reps);
    ok &= report("softmin_cols", tsc, toc, sc == oc);
  }
  return ok ? 0 : 1;
}
