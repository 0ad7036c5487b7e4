// Compares the threaded Gram-matrix assembly against the serial
// reference on growing problem sizes. The two paths must agree bitwise;
// any nonzero difference is a bug, not rounding.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "aol/kernels.hpp"
#include "aol/rng.hpp"

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  aol::Rng rng(aol::mix_seed(seed, 0));
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
  return X;
}

template <typename F>
double best_ms(F&& f, int repeats) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int p = 10;
  if (argc > 1) p = std::atoi(argv[1]);
  if (p <= 0) {
    std::fprintf(stderr, "usage: kernel_bench [p]   (covariate count, positive; default 10)\n");
    return 2;
  }

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::printf("%8s %8s %12s %12s %9s %10s\n", "n", "p", "serial ms", "parallel ms", "speedup",
              "max|diff|");

  aol::KernelSpec spec;
  spec.kind = aol::KernelKind::rbf;
  spec.sigma = 0.7;

  bool all_equal = true;
  for (Eigen::Index n : {200, 500, 1000, 2000}) {
    const Eigen::MatrixXd X = random_matrix(n, p, 42 + static_cast<std::uint64_t>(n));
    const int repeats = n <= 500 ? 5 : 3;

    Eigen::MatrixXd Ks, Kp;
    const double serial_ms = best_ms([&] { Ks = aol::kernel_matrix_serial(spec, X, X); }, repeats);
    const double parallel_ms = best_ms([&] { Kp = aol::kernel_matrix(spec, X, X); }, repeats);
    const double diff = (Ks - Kp).cwiseAbs().maxCoeff();
    if (diff != 0.0) all_equal = false;

    std::printf("%8td %8d %12.2f %12.2f %8.2fx %10.3g\n", static_cast<std::ptrdiff_t>(n), p,
                serial_ms, parallel_ms, serial_ms / parallel_ms, diff);
  }

  if (!all_equal) {
    std::printf("FAIL: threaded assembly diverged from the serial reference\n");
    return 1;
  }
  std::printf("threaded assembly matches the serial reference exactly\n");
  return 0;
}
