#pragma once

#include <Eigen/Core>
#include <optional>

#include "bregman/kernels.hpp"

namespace bregman {

// Everything the per-iteration estimates need from the last two iterates.
// mirror_* must equal kernel.gradient at the matching points; gamma_curr is
// the stepsize that produced x_curr.
struct IterPairSnapshot {
  VectorXd x_prev;
  VectorXd x_curr;
  VectorXd grad_f_prev;
  VectorXd grad_f_curr;
  VectorXd mirror_prev;
  VectorXd mirror_curr;
  double gamma_curr = 0.0;
};

struct LocalEstimates {
  double ell = 0.0;     // relative smoothness estimate
  double a = 1.0;       // local symmetry coefficient
  double lambda = 0.0;  // forward-operator curvature estimate
  double delta = 0.0;   // the delta used for lambda
};

struct EstimateCounters {
  long ell_clamped = 0;  // negative smoothness ratios zeroed (fp noise)
};

// Consecutive-iterate pairs closer than this (in symmetrized distance) are
// treated as converged.
inline constexpr double kDegeneratePairEps = 1e-300;

// <grad f difference, x difference> / <mirror difference, x difference>.
double smoothness_estimate(const IterPairSnapshot& snap);

// D(x_curr, x_prev) / D(x_prev, x_curr).
double symmetry_estimate(const Kernel& k, const IterPairSnapshot& snap);

// 2 D*(grad(x_curr) + delta [H(x_curr) - H(x_prev)], grad(x_curr))
//   / (delta^2 Dsym(x_curr, x_prev)),  H = grad kappa - gamma grad f.
double curvature_estimate(const Kernel& k, const IterPairSnapshot& snap,
                          double delta);

// All three at once; clamps a negative smoothness ratio at zero and counts
// the clamp when counters are given.
LocalEstimates local_estimates(const Kernel& k, const IterPairSnapshot& snap,
                               double delta,
                               EstimateCounters* counters = nullptr);

// (1/delta) D(x, y) + (1/delta) D*(grad(y) + delta v, grad(y));
// upper-bounds <x - y, v> for every delta > 0.
double bregman_young_bound(const Kernel& k, const VectorXd& x,
                           const VectorXd& y, const VectorXd& v, double delta);

// The minimizer delta* of the Young bound, characterized by
// D*(grad(y), grad(y) + delta* v) = D(x, y). Empty when the bound is
// monotonically decreasing (possible for kernels with non-open domain).
std::optional<double> bregman_cauchy_schwarz_delta(const Kernel& k,
                                                   const VectorXd& x,
                                                   const VectorXd& y,
                                                   const VectorXd& v);

}  // namespace bregman
