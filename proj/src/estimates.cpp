#include "bregman/estimates.hpp"

#include <cmath>

namespace bregman {

namespace {

double symmetrized_from_snapshot(const IterPairSnapshot& snap) {
  return (snap.mirror_curr - snap.mirror_prev).dot(snap.x_curr - snap.x_prev);
}

void require_nondegenerate(double dsym) {
  if (!(dsym >= kDegeneratePairEps))
    throw degenerate_pair_error("consecutive iterates coincide");
}

}  // namespace

double smoothness_estimate(const IterPairSnapshot& snap) {
  const double den = symmetrized_from_snapshot(snap);
  require_nondegenerate(den);
  const double num =
      (snap.grad_f_curr - snap.grad_f_prev).dot(snap.x_curr - snap.x_prev);
  return num / den;
}

double symmetry_estimate(const Kernel& k, const IterPairSnapshot& snap) {
  const double reverse = k.bregman(snap.x_prev, snap.x_curr);
  require_nondegenerate(reverse);
  return k.bregman(snap.x_curr, snap.x_prev) / reverse;
}

double curvature_estimate(const Kernel& k, const IterPairSnapshot& snap,
                          double delta) {
  const double dsym = symmetrized_from_snapshot(snap);
  require_nondegenerate(dsym);
  // H(x_curr) - H(x_prev) with H = grad kappa - gamma grad f
  const VectorXd w = (snap.mirror_curr - snap.mirror_prev) -
                     snap.gamma_curr * (snap.grad_f_curr - snap.grad_f_prev);
  const VectorXd eta1 = snap.mirror_curr + delta * w;
  const double dstar =
      k.conjugate_bregman_from(eta1, snap.mirror_curr, snap.x_curr);
  return 2.0 * dstar / (delta * delta * dsym);
}

LocalEstimates local_estimates(const Kernel& k, const IterPairSnapshot& snap,
                               double delta, EstimateCounters* counters) {
  LocalEstimates est;
  est.delta = delta;
  est.ell = smoothness_estimate(snap);
  if (est.ell < 0.0) {
    est.ell = 0.0;
    if (counters != nullptr) ++counters->ell_clamped;
  }
  est.a = symmetry_estimate(k, snap);
  est.lambda = curvature_estimate(k, snap, delta);
  return est;
}

double bregman_young_bound(const Kernel& k, const VectorXd& x,
                           const VectorXd& y, const VectorXd& v,
                           double delta) {
  const VectorXd gy = k.gradient(y);
  const double d = bregman_distance(k, x, y);
  const double dstar = k.conjugate_bregman_from(gy + delta * v, gy, y);
  return (d + dstar) / delta;
}

std::optional<double> bregman_cauchy_schwarz_delta(const Kernel& k,
                                                   const VectorXd& x,
                                                   const VectorXd& y,
                                                   const VectorXd& v) {
  const double target = bregman_distance(k, x, y);
  if (!(target > 0.0))
    throw degenerate_pair_error("cauchy-schwarz delta requires x != y");
  if (v.isZero(0.0))
    throw degenerate_pair_error("cauchy-schwarz delta requires v != 0");
  const VectorXd gy = k.gradient(y);

  // residual(delta) = D*(grad(y), grad(y) + delta v) - D(x, y) is strictly
  // increasing from -D(x,y); bracket by doubling, then bisect.
  const auto residual = [&](double delta) {
    return k.conjugate_bregman(gy, gy + delta * v) - target;
  };

  double hi = 1.0;
  double lo = 0.0;
  double r_hi = residual(hi);
  if (r_hi < 0.0) {
    const double cap = 0x1p60;
    while (r_hi < 0.0) {
      if (hi >= cap) return std::nullopt;  // bound decreasing over the search range
      lo = hi;
      hi *= 2.0;
      r_hi = residual(hi);
    }
  }
  if (r_hi == 0.0) return hi;

  for (int it = 0; it < 240; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (residual(mid) >= 0.0)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= 1e-12 * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace bregman
