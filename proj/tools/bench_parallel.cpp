// Microbenchmark for the data-parallel primitives: serial reference vs the
// OpenMP path, plus a consistency check that both produce identical bits.

#include <chrono>
#include <cstdio>

#include <omp.h>

#include "bregman/parallel.hpp"
#include "bregman/rng.hpp"

using bregman::par::Mode;

namespace {

template <class F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", omp_get_max_threads());

  bregman::Rng rng(7);
  for (const long n : {100000L, 1000000L, 4000000L}) {
    const Eigen::VectorXd a = rng.normal_vector(static_cast<int>(n));
    const Eigen::VectorXd b = rng.normal_vector(static_cast<int>(n));

    bregman::par::set_mode(Mode::Serial);
    volatile double sink = 0.0;
    const double ts =
        time_best_of(5, [&] { sink = bregman::par::dot(a, b); });
    const double serial_value = bregman::par::dot(a, b);

    bregman::par::set_mode(Mode::OpenMP);
    const double tp =
        time_best_of(5, [&] { sink = bregman::par::dot(a, b); });
    const double omp_value = bregman::par::dot(a, b);
    (void)sink;

    std::printf("dot       n=%8ld  serial %8.3f ms  omp %8.3f ms  x%.2f  %s\n",
                n, ts * 1e3, tp * 1e3, ts / tp,
                serial_value == omp_value ? "bit-identical" : "MISMATCH");
  }

  for (const int rows : {500, 2000}) {
    const int cols = rows;
    const Eigen::MatrixXd m = rng.normal_matrix(rows, cols);
    const Eigen::VectorXd v = rng.normal_vector(rows);
    Eigen::VectorXd out(cols);

    bregman::par::set_mode(Mode::Serial);
    const double ts =
        time_best_of(5, [&] { bregman::par::matvec_t(m, v, out); });
    const Eigen::VectorXd serial_out = out;

    bregman::par::set_mode(Mode::OpenMP);
    const double tp =
        time_best_of(5, [&] { bregman::par::matvec_t(m, v, out); });

    std::printf("matvec_t  %dx%d  serial %8.3f ms  omp %8.3f ms  x%.2f  %s\n",
                rows, cols, ts * 1e3, tp * 1e3, ts / tp,
                serial_out == out ? "bit-identical" : "MISMATCH");
  }

  bregman::par::set_mode(Mode::OpenMP);
  return 0;
}
