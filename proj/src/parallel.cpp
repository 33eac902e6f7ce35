#include "bregman/parallel.hpp"

#include <atomic>
#include <vector>

namespace bregman::par {

namespace {
std::atomic<Mode> g_mode{Mode::OpenMP};

inline double chunk_dot(const double* a, const double* b, std::ptrdiff_t lo,
                        std::ptrdiff_t hi) {
  double s = 0.0;
  for (std::ptrdiff_t i = lo; i < hi; ++i) s += a[i] * b[i];
  return s;
}

inline double chunk_sum(const double* a, std::ptrdiff_t lo, std::ptrdiff_t hi) {
  double s = 0.0;
  for (std::ptrdiff_t i = lo; i < hi; ++i) s += a[i];
  return s;
}
}  // namespace

Mode mode() { return g_mode.load(std::memory_order_relaxed); }
void set_mode(Mode m) { g_mode.store(m, std::memory_order_relaxed); }

double dot(const double* a, const double* b, std::ptrdiff_t n) {
  if (n <= 0) return 0.0;
  const std::ptrdiff_t nchunks = (n + kChunk - 1) / kChunk;
  if (nchunks == 1) return chunk_dot(a, b, 0, n);
  std::vector<double> partial(static_cast<std::size_t>(nchunks));
  if (mode() == Mode::OpenMP) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
      const std::ptrdiff_t lo = c * kChunk;
      partial[static_cast<std::size_t>(c)] =
          chunk_dot(a, b, lo, std::min(lo + kChunk, n));
    }
  } else {
    for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
      const std::ptrdiff_t lo = c * kChunk;
      partial[static_cast<std::size_t>(c)] =
          chunk_dot(a, b, lo, std::min(lo + kChunk, n));
    }
  }
  // Ordered combine keeps the result independent of the thread count.
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

double sum(const double* a, std::ptrdiff_t n) {
  if (n <= 0) return 0.0;
  const std::ptrdiff_t nchunks = (n + kChunk - 1) / kChunk;
  if (nchunks == 1) return chunk_sum(a, 0, n);
  std::vector<double> partial(static_cast<std::size_t>(nchunks));
  if (mode() == Mode::OpenMP) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
      const std::ptrdiff_t lo = c * kChunk;
      partial[static_cast<std::size_t>(c)] =
          chunk_sum(a, lo, std::min(lo + kChunk, n));
    }
  } else {
    for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
      const std::ptrdiff_t lo = c * kChunk;
      partial[static_cast<std::size_t>(c)] =
          chunk_sum(a, lo, std::min(lo + kChunk, n));
    }
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

void matvec_t(const Eigen::MatrixXd& m, const Eigen::VectorXd& v,
              Eigen::VectorXd& out) {
  const std::ptrdiff_t cols = m.cols();
  const std::ptrdiff_t rows = m.rows();
  out.resize(cols);
  const double* vd = v.data();
  if (mode() == Mode::OpenMP && rows * cols >= kChunk) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < cols; ++j)
      out[j] = chunk_dot(m.col(j).data(), vd, 0, rows);
  } else {
    for (std::ptrdiff_t j = 0; j < cols; ++j)
      out[j] = chunk_dot(m.col(j).data(), vd, 0, rows);
  }
}

}  // namespace bregman::par
