#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "bregman/errors.hpp"

namespace bregman {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class KernelDomain { FullSpace, NonnegativeOrthant };

// A Legendre, 1-coercive distance-generating function: value, gradient,
// mirror inverse (inverse gradient map) and convex conjugate, plus domain
// metadata. Instances are immutable after construction and safe to share
// across threads.
class Kernel {
 public:
  virtual ~Kernel() = default;

  virtual std::string_view name() const = 0;
  virtual KernelDomain domain() const = 0;
  virtual bool in_domain(const VectorXd& x) const = 0;
  virtual bool is_interior(const VectorXd& x) const = 0;

  // Extended-real value: +inf outside the domain.
  virtual double value(const VectorXd& x) const = 0;
  // Defined on the domain interior only.
  virtual VectorXd gradient(const VectorXd& x) const = 0;
  // Inverse of the gradient map; defined on all of R^n (1-coercivity).
  virtual VectorXd mirror_inverse(const VectorXd& eta) const = 0;
  virtual double conjugate_value(const VectorXd& eta) const = 0;

  // Global symmetry coefficient inf D(x,y)/D(y,x), when strictly positive.
  virtual std::optional<double> symmetry_coefficient() const = 0;
  // Strong convexity modulus, when the kernel has one (BaGRAAL only).
  virtual std::optional<double> strong_convexity_modulus() const = 0;

  // D(x, y) for x in dom, y interior. Overridden where a numerically
  // stabler closed form exists.
  virtual double bregman(const VectorXd& x, const VectorXd& y) const;

  // D*(eta1, eta2) on the conjugate.
  virtual double conjugate_bregman(const VectorXd& eta1,
                                   const VectorXd& eta2) const;

  // D*(eta1, eta2) when the primal point x2 = mirror_inverse(eta2) is
  // already known; avoids the inverse-map solve on the generic path.
  virtual double conjugate_bregman_from(const VectorXd& eta1,
                                        const VectorXd& eta2,
                                        const VectorXd& x2) const;
};

// kappa = ||.||^2 / 2
class EuclideanKernel final : public Kernel {
 public:
  std::string_view name() const override { return "euclidean"; }
  KernelDomain domain() const override { return KernelDomain::FullSpace; }
  bool in_domain(const VectorXd&) const override { return true; }
  bool is_interior(const VectorXd&) const override { return true; }
  double value(const VectorXd& x) const override;
  VectorXd gradient(const VectorXd& x) const override { return x; }
  VectorXd mirror_inverse(const VectorXd& eta) const override { return eta; }
  double conjugate_value(const VectorXd& eta) const override;
  std::optional<double> symmetry_coefficient() const override { return 1.0; }
  std::optional<double> strong_convexity_modulus() const override {
    return 1.0;
  }
  double bregman(const VectorXd& x, const VectorXd& y) const override;
  double conjugate_bregman(const VectorXd& eta1,
                           const VectorXd& eta2) const override;
  double conjugate_bregman_from(const VectorXd& eta1, const VectorXd& eta2,
                                const VectorXd&) const override {
    return conjugate_bregman(eta1, eta2);
  }
};

// kappa = <x, Qx> / 2 for symmetric positive definite Q.
class QuadraticKernel final : public Kernel {
 public:
  explicit QuadraticKernel(MatrixXd q);

  std::string_view name() const override { return "quadratic"; }
  KernelDomain domain() const override { return KernelDomain::FullSpace; }
  bool in_domain(const VectorXd&) const override { return true; }
  bool is_interior(const VectorXd&) const override { return true; }
  double value(const VectorXd& x) const override;
  VectorXd gradient(const VectorXd& x) const override { return q_ * x; }
  VectorXd mirror_inverse(const VectorXd& eta) const override {
    return llt_.solve(eta);
  }
  double conjugate_value(const VectorXd& eta) const override;
  std::optional<double> symmetry_coefficient() const override { return 1.0; }
  std::optional<double> strong_convexity_modulus() const override {
    return lambda_min_;
  }
  double bregman(const VectorXd& x, const VectorXd& y) const override;
  double conjugate_bregman(const VectorXd& eta1,
                           const VectorXd& eta2) const override;
  double conjugate_bregman_from(const VectorXd& eta1, const VectorXd& eta2,
                                const VectorXd&) const override {
    return conjugate_bregman(eta1, eta2);
  }

  const MatrixXd& q() const { return q_; }

 private:
  MatrixXd q_;
  Eigen::LLT<MatrixXd> llt_;
  double lambda_min_ = 0.0;
};

// Boltzmann-Shannon entropy: kappa = sum x_i ln x_i on the nonnegative
// orthant, with the 0 ln 0 = 0 convention on the boundary.
class EntropyKernel final : public Kernel {
 public:
  std::string_view name() const override { return "entropy"; }
  KernelDomain domain() const override {
    return KernelDomain::NonnegativeOrthant;
  }
  bool in_domain(const VectorXd& x) const override;
  bool is_interior(const VectorXd& x) const override;
  double value(const VectorXd& x) const override;
  VectorXd gradient(const VectorXd& x) const override;
  VectorXd mirror_inverse(const VectorXd& eta) const override;
  double conjugate_value(const VectorXd& eta) const override;
  std::optional<double> symmetry_coefficient() const override {
    return std::nullopt;  // non-open domain: alpha = 0
  }
  std::optional<double> strong_convexity_modulus() const override {
    return std::nullopt;
  }
  double bregman(const VectorXd& x, const VectorXd& y) const override;
  double conjugate_bregman(const VectorXd& eta1,
                           const VectorXd& eta2) const override;
  double conjugate_bregman_from(const VectorXd& eta1, const VectorXd& eta2,
                                const VectorXd&) const override {
    return conjugate_bregman(eta1, eta2);
  }
};

// kappa = ||x||^4 / 4 + ||x||^2 / 2; grows with the quartic model problems.
class QuarticKernel final : public Kernel {
 public:
  std::string_view name() const override { return "quartic"; }
  KernelDomain domain() const override { return KernelDomain::FullSpace; }
  bool in_domain(const VectorXd&) const override { return true; }
  bool is_interior(const VectorXd&) const override { return true; }
  double value(const VectorXd& x) const override;
  VectorXd gradient(const VectorXd& x) const override;
  VectorXd mirror_inverse(const VectorXd& eta) const override;
  double conjugate_value(const VectorXd& eta) const override;
  std::optional<double> symmetry_coefficient() const override;
  std::optional<double> strong_convexity_modulus() const override {
    return 1.0;
  }
  double bregman(const VectorXd& x, const VectorXd& y) const override;
  double conjugate_bregman(const VectorXd& eta1,
                           const VectorXd& eta2) const override;
  double conjugate_bregman_from(const VectorXd& eta1, const VectorXd& eta2,
                                const VectorXd& x2) const override;
};

// Unique nonnegative root t of t^3 + t = r.
double quartic_radius_root(double r);

// Inverse gradient map of the quartic kernel: eta / (t^2 + 1) with
// t solving t^3 + t = ||eta||.
VectorXd quartic_mirror_inverse(const VectorXd& eta);

struct BregmanPair {
  double forward;      // D(x, y)
  double reverse;      // D(y, x)
  double symmetrized;  // D(x, y) + D(y, x)
};

// D(x, y). Throws domain_error if y is not interior; returns +inf if x is
// outside the kernel domain.
double bregman_distance(const Kernel& k, const VectorXd& x, const VectorXd& y);

// D*(eta1, eta2) on the conjugate; full domain.
double conjugate_bregman_distance(const Kernel& k, const VectorXd& eta1,
                                  const VectorXd& eta2);

// <grad(x) - grad(y), x - y>; both points must be interior.
double symmetrized_bregman(const Kernel& k, const VectorXd& x,
                           const VectorXd& y);

BregmanPair bregman_pair(const Kernel& k, const VectorXd& x,
                         const VectorXd& y);

// "euclidean" | "quadratic" | "entropy" | "quartic". The quadratic kernel
// needs its SPD matrix.
std::unique_ptr<Kernel> make_kernel(const std::string& id,
                                    const MatrixXd* q = nullptr);

}  // namespace bregman
