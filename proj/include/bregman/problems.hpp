#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "bregman/kernels.hpp"

namespace bregman {

enum class NonsmoothKind { Zero, L1, SimplexIndicator };

// A smooth/nonsmooth oracle pair with the Bregman prox of its nonsmooth part
// under the kernel the instance was built for. Immutable after generation;
// oracle evaluations are reentrant.
struct ProblemInstance {
  std::string name;
  int m = 0;
  int n = 0;
  std::uint64_t seed = 0;
  std::string kernel_id;
  std::shared_ptr<const Kernel> kernel;

  std::function<double(const VectorXd&)> f_value;
  std::function<VectorXd(const VectorXd&)> f_gradient;
  std::function<double(const VectorXd&)> g_value;
  // Solves argmin_w  <v, w> + g(w) + D(w, x)/gamma.
  std::function<VectorXd(const VectorXd& x, const VectorXd& v, double gamma)>
      prox;

  std::optional<double> global_modulus;
  VectorXd feasible_start;

  NonsmoothKind g_kind = NonsmoothKind::Zero;
  double g_lambda = 0.0;

  double cost(const VectorXd& x) const { return f_value(x) + g_value(x); }
};

// Bregman prox of g under `kernel` for the supported pairings; throws
// config_error for a pairing without a solver.
std::function<VectorXd(const VectorXd&, const VectorXd&, double)> make_prox(
    std::shared_ptr<const Kernel> kernel, NonsmoothKind g_kind, double lambda);

// f(x) = ||Ax - b||_4^4 / 4 + ||Cx - d||^2 / 2 with entries of A, C uniform
// on [0,1]; quartic kernel, g = 0.
ProblemInstance poly_hessian_instance(int m, int n, std::uint64_t seed,
                                      const std::string& kernel_id = "quartic",
                                      double noise_scale = 0.1);

// f(x) = KL(Ax | b) with A >= 0 normalized to unit total mass; entropy
// kernel, g = lambda ||x||_1.
ProblemInstance kl_regression_instance(int m, int n, double lambda,
                                       std::uint64_t seed,
                                       double noise_scale = 0.1);

// Same oracles from explicit data; validates nonnegativity/positivity.
ProblemInstance kl_regression_from_data(MatrixXd a, VectorXd b, double lambda);

// f(x) = ln det(H diag(x)^{-1} H^T) over the probability simplex; entropy
// kernel, g = simplex indicator. With an empty path the matrix is synthetic.
ProblemInstance logdet_simplex_instance(int m, int n, std::uint64_t seed,
                                        const std::string& dataset_path = "");

ProblemInstance logdet_simplex_from_matrix(MatrixXd h);

// f(x) = ||Ax - b||^2 / 2, g = lambda ||x||_1; kernel "euclidean" or
// "quartic".
ProblemInstance lasso_instance(int m, int n, double lambda,
                               const std::string& kernel_id,
                               std::uint64_t seed);

struct LibsvmData {
  MatrixXd features;  // rows = samples
  VectorXd labels;
};

// Sparse LIBSVM text format: per line "label index:value ...", 1-based,
// strictly increasing indices.
LibsvmData read_libsvm(const std::string& path);

// Scalar equation s (s + 1)^2 = c, s >= 0 (quartic-kernel l1 prox).
double quartic_l1_scale_root(double c);

// Distance of the implied prox subgradient from the subdifferential of g at
// x_to, for the step x_from -> x_to with stepsize gamma and v = grad f(x_from).
double subgradient_residual(const Kernel& kernel,
                            const ProblemInstance& problem,
                            const VectorXd& x_from, const VectorXd& x_to,
                            const VectorXd& v, double gamma);

ProblemInstance build_instance(const std::string& family, int m, int n,
                               double lambda, double noise_scale,
                               std::uint64_t seed, const std::string& kernel_id,
                               const std::string& dataset_path = "");

// Kernel by id with any data it needs: the "quadratic" choice draws a random
// SPD matrix of size n seeded by `seed`.
std::shared_ptr<const Kernel> make_run_kernel(const std::string& kernel_id,
                                              int n, std::uint64_t seed);

}  // namespace bregman
