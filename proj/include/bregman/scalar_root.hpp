#pragma once

#include <cmath>

#include "bregman/errors.hpp"

namespace bregman::detail {

// Root of a strictly increasing f on [lo, hi] with f(lo) <= 0 <= f(hi).
// Newton steps with a bisection safeguard; stops on |f| <= abs_tol or when
// the bracket shrinks to a few ulp.
template <class F, class DF>
double safeguarded_newton(F&& f, DF&& df, double lo, double hi, double x0,
                          double abs_tol, int max_iter = 200) {
  double x = std::min(std::max(x0, lo), hi);
  for (int it = 0; it < max_iter; ++it) {
    const double fx = f(x);
    if (std::abs(fx) <= abs_tol) return x;
    if (fx > 0.0)
      hi = x;
    else
      lo = x;
    if (hi - lo <= 4e-16 * hi) return 0.5 * (lo + hi);
    const double d = df(x);
    double next = (d > 0.0) ? x - fx / d : x;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) return x;
    x = next;
  }
  throw numerical_error("scalar root solve did not converge");
}

}  // namespace bregman::detail
