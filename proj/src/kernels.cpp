#include "bregman/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "bregman/parallel.hpp"
#include "bregman/scalar_root.hpp"

namespace bregman {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

inline double xlogx(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }
}  // namespace

// ---------------------------------------------------------------------------
// Kernel base: generic formulas

double Kernel::bregman(const VectorXd& x, const VectorXd& y) const {
  const double vx = value(x);
  if (!std::isfinite(vx)) return kInf;
  return vx - value(y) - gradient(y).dot(x - y);
}

double Kernel::conjugate_bregman(const VectorXd& eta1,
                                 const VectorXd& eta2) const {
  return conjugate_bregman_from(eta1, eta2, mirror_inverse(eta2));
}

double Kernel::conjugate_bregman_from(const VectorXd& eta1,
                                      const VectorXd& eta2,
                                      const VectorXd& x2) const {
  // kappa*(eta2) = <eta2, x2> - kappa(x2) by the Fenchel identity, and
  // grad kappa*(eta2) = x2, so no inverse-map solve is needed here.
  const double c1 = conjugate_value(eta1);
  if (!std::isfinite(c1)) {
    if (std::isnan(c1)) throw numerical_error("conjugate value is NaN");
    return kInf;
  }
  return c1 - (eta2.dot(x2) - value(x2)) - x2.dot(eta1 - eta2);
}

// ---------------------------------------------------------------------------
// Euclidean

double EuclideanKernel::value(const VectorXd& x) const {
  return 0.5 * par::dot(x, x);
}

double EuclideanKernel::conjugate_value(const VectorXd& eta) const {
  return 0.5 * par::dot(eta, eta);
}

double EuclideanKernel::bregman(const VectorXd& x, const VectorXd& y) const {
  return 0.5 * (x - y).squaredNorm();
}

double EuclideanKernel::conjugate_bregman(const VectorXd& eta1,
                                          const VectorXd& eta2) const {
  return 0.5 * (eta1 - eta2).squaredNorm();
}

// ---------------------------------------------------------------------------
// Weighted quadratic

QuadraticKernel::QuadraticKernel(MatrixXd q) : q_(std::move(q)) {
  if (q_.rows() != q_.cols()) throw config_error("quadratic kernel: Q not square");
  if (!q_.isApprox(q_.transpose(), 1e-12))
    throw config_error("quadratic kernel: Q not symmetric");
  llt_.compute(q_);
  if (llt_.info() != Eigen::Success)
    throw config_error("quadratic kernel: Q not positive definite");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(q_, Eigen::EigenvaluesOnly);
  lambda_min_ = es.eigenvalues().minCoeff();
}

double QuadraticKernel::value(const VectorXd& x) const {
  return 0.5 * x.dot(q_ * x);
}

double QuadraticKernel::conjugate_value(const VectorXd& eta) const {
  return 0.5 * eta.dot(llt_.solve(eta));
}

double QuadraticKernel::bregman(const VectorXd& x, const VectorXd& y) const {
  const VectorXd d = x - y;
  return 0.5 * d.dot(q_ * d);
}

double QuadraticKernel::conjugate_bregman(const VectorXd& eta1,
                                          const VectorXd& eta2) const {
  const VectorXd d = eta1 - eta2;
  return 0.5 * d.dot(llt_.solve(d));
}

// ---------------------------------------------------------------------------
// Boltzmann-Shannon entropy

bool EntropyKernel::in_domain(const VectorXd& x) const {
  return (x.array() >= 0.0).all();
}

bool EntropyKernel::is_interior(const VectorXd& x) const {
  return (x.array() > 0.0).all();
}

double EntropyKernel::value(const VectorXd& x) const {
  if (!in_domain(x)) return kInf;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += xlogx(x[i]);
  return s;
}

VectorXd EntropyKernel::gradient(const VectorXd& x) const {
  return x.array().log() + 1.0;
}

VectorXd EntropyKernel::mirror_inverse(const VectorXd& eta) const {
  return (eta.array() - 1.0).exp();
}

double EntropyKernel::conjugate_value(const VectorXd& eta) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += std::exp(eta[i] - 1.0);
  if (!std::isfinite(s))
    throw numerical_error("entropy conjugate overflowed");
  return s;
}

double EntropyKernel::bregman(const VectorXd& x, const VectorXd& y) const {
  // KL form sum x ln(x/y) - x + y with 0 ln 0 = 0, written per component as
  // y ((1+t) log1p(t) - t), t = (x-y)/y, which stays accurate (and
  // nonnegative) when x and y nearly coincide.
  if (!in_domain(x)) return kInf;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i], yi = y[i];
    if (xi > 0.0) {
      const double t = (xi - yi) / yi;
      s += yi * ((1.0 + t) * std::log1p(t) - t);
    } else {
      s += yi;
    }
  }
  return s;
}

double EntropyKernel::conjugate_bregman(const VectorXd& eta1,
                                        const VectorXd& eta2) const {
  // Per component e^{a} - e^{b} - e^{b} (a - b), a = eta1 - 1, b = eta2 - 1.
  // Factored through expm1 where the difference cancels; direct otherwise
  // (the factored form turns into inf * 0 for large |a - b|).
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta1.size(); ++i) {
    const double d = eta1[i] - eta2[i];
    const double eb = std::exp(eta2[i] - 1.0);
    if (std::abs(d) <= 30.0)
      s += eb * (std::expm1(d) - d);
    else
      s += std::exp(eta1[i] - 1.0) - eb * (1.0 + d);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Quartic

double quartic_radius_root(double r) {
  if (r <= 0.0) return 0.0;
  if (!std::isfinite(r))
    throw numerical_error("quartic mirror inverse: |eta| is not finite");
  const double hi = std::max(1.0, r);
  // min(cbrt(r), r) sits just above the root in both regimes, so Newton
  // lands in a handful of steps even at extreme magnitudes.
  const double x0 = std::min(std::cbrt(r), r);
  // |f| tolerance follows the equation's scale; 1e-14 absolute is not
  // representable at the root once r is large.
  return detail::safeguarded_newton(
      [r](double t) { return (t * t * t + t) - r; },
      [](double t) { return 3.0 * t * t + 1.0; }, 0.0, hi, x0,
      1e-14 * std::max(1.0, r));
}

VectorXd quartic_mirror_inverse(const VectorXd& eta) {
  const double r = eta.norm();
  if (r == 0.0) return VectorXd::Zero(eta.size());
  const double t = quartic_radius_root(r);
  return eta / (t * t + 1.0);
}

double QuarticKernel::value(const VectorXd& x) const {
  const double s = par::dot(x, x);
  return 0.25 * s * s + 0.5 * s;
}

VectorXd QuarticKernel::gradient(const VectorXd& x) const {
  return (par::dot(x, x) + 1.0) * x;
}

VectorXd QuarticKernel::mirror_inverse(const VectorXd& eta) const {
  return quartic_mirror_inverse(eta);
}

double QuarticKernel::conjugate_value(const VectorXd& eta) const {
  // With t solving t^3 + t = ||eta||: kappa* = 3/4 t^4 + 1/2 t^2.
  const double t = quartic_radius_root(eta.norm());
  const double t2 = t * t;
  return 0.75 * t2 * t2 + 0.5 * t2;
}

std::optional<double> QuarticKernel::symmetry_coefficient() const {
  return 2.0 - std::sqrt(3.0);
}

double QuarticKernel::bregman(const VectorXd& x, const VectorXd& y) const {
  // Exact expansion in d = x - y:
  //   D(x, y) = (<y, d> + |d|^2/2)^2 + |d|^2 (|y|^2 + 1) / 2,
  // free of the cancellation the kappa-difference form suffers for x near y.
  const VectorXd d = x - y;
  const double q = d.squaredNorm();
  const double p = y.dot(d) + 0.5 * q;
  return p * p + 0.5 * q * (y.squaredNorm() + 1.0);
}

double QuarticKernel::conjugate_bregman(const VectorXd& eta1,
                                        const VectorXd& eta2) const {
  return conjugate_bregman_from(eta1, eta2, mirror_inverse(eta2));
}

double QuarticKernel::conjugate_bregman_from(const VectorXd& eta1,
                                             const VectorXd& eta2,
                                             const VectorXd& x2) const {
  // D*(eta1, eta2) = D(x2, x1) with x_i the primal images; the primal form
  // above is stable for nearby arguments, the Fenchel difference is not.
  (void)eta2;
  return bregman(x2, mirror_inverse(eta1));
}

// ---------------------------------------------------------------------------
// Free functions

double bregman_distance(const Kernel& k, const VectorXd& x,
                        const VectorXd& y) {
  if (!k.is_interior(y))
    throw domain_error("bregman_distance: y not in the domain interior");
  if (!k.in_domain(x)) return kInf;
  return k.bregman(x, y);
}

double conjugate_bregman_distance(const Kernel& k, const VectorXd& eta1,
                                  const VectorXd& eta2) {
  return k.conjugate_bregman(eta1, eta2);
}

double symmetrized_bregman(const Kernel& k, const VectorXd& x,
                           const VectorXd& y) {
  if (!k.is_interior(x) || !k.is_interior(y))
    throw domain_error("symmetrized_bregman: points must be interior");
  return (k.gradient(x) - k.gradient(y)).dot(x - y);
}

BregmanPair bregman_pair(const Kernel& k, const VectorXd& x,
                         const VectorXd& y) {
  const double f = bregman_distance(k, x, y);
  const double r = bregman_distance(k, y, x);
  return BregmanPair{f, r, f + r};
}

std::unique_ptr<Kernel> make_kernel(const std::string& id, const MatrixXd* q) {
  if (id == "euclidean") return std::make_unique<EuclideanKernel>();
  if (id == "quadratic") {
    if (q == nullptr)
      throw config_error("quadratic kernel requires an SPD matrix");
    return std::make_unique<QuadraticKernel>(*q);
  }
  if (id == "entropy") return std::make_unique<EntropyKernel>();
  if (id == "quartic") return std::make_unique<QuarticKernel>();
  throw config_error("unknown kernel id: " + id);
}

}  // namespace bregman
