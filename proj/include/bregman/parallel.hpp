#pragma once

#include <Eigen/Core>
#include <cstddef>

// Data-parallel primitives used on the hot oracle paths. Every operation has
// a serial reference and an OpenMP variant selected at runtime; both use the
// same fixed-chunk summation order, so results are bit-identical regardless
// of mode or thread count. tools/bench_parallel compares their throughput.
namespace bregman::par {

enum class Mode { Serial, OpenMP };

Mode mode();
void set_mode(Mode m);

// Fixed summation block; also the parallel grain size.
inline constexpr std::ptrdiff_t kChunk = 1024;

double dot(const double* a, const double* b, std::ptrdiff_t n);
double sum(const double* a, std::ptrdiff_t n);

inline double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return dot(a.data(), b.data(), a.size());
}
inline double sum(const Eigen::VectorXd& a) { return sum(a.data(), a.size()); }

// out[j] = <M.col(j), v>. With M holding the transpose of a row-major
// operator this evaluates both A*x and A^T*y through contiguous columns.
void matvec_t(const Eigen::MatrixXd& m, const Eigen::VectorXd& v,
              Eigen::VectorXd& out);

inline Eigen::VectorXd matvec_t(const Eigen::MatrixXd& m,
                                const Eigen::VectorXd& v) {
  Eigen::VectorXd out(m.cols());
  matvec_t(m, v, out);
  return out;
}

// out[i] = f(i) for a pure element function; parallel over i.
template <class F>
void map_index(std::ptrdiff_t n, Eigen::VectorXd& out, F&& f);

}  // namespace bregman::par

namespace bregman::par {

template <class F>
void map_index(std::ptrdiff_t n, Eigen::VectorXd& out, F&& f) {
  if (mode() == Mode::OpenMP && n >= kChunk) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = f(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = f(i);
  }
}

}  // namespace bregman::par
