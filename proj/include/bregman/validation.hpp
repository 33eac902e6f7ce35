#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bregman/solvers.hpp"

namespace bregman {

// Outcome of one invariant suite. Residuals are normalized by the magnitude
// of the quantities entering the identity, so "relative" is backward-error
// style and meaningful across many orders of magnitude.
struct InvariantReport {
  std::string name;
  long samples = 0;
  long skipped = 0;
  double worst_violation = 0.0;
  double threshold = 0.0;
  bool pass = false;
  bool applicable = true;  // e.g. merit descent with a boundary solution
  std::string context;     // offending sample payload when failing

  std::string to_json() const;
};

// --- Kernel-level suites ----------------------------------------------------

// Young dominance: bound - <x - y, v> >= -threshold on random samples.
InvariantReport check_bregman_young(const Kernel& kernel, int dim,
                                    long n_samples, std::uint64_t seed);

// Fact D(iv) duality plus mirror round-trip and the Fenchel identity.
InvariantReport check_duality_roundtrip(const Kernel& kernel, int dim,
                                        long n_samples, std::uint64_t seed);

// Three-point identity residual.
InvariantReport check_three_point(const Kernel& kernel, int dim,
                                  long n_samples, std::uint64_t seed);

// delta* characterization: residual at the root, derivative sign change,
// and the symmetry-coefficient relaxation when alpha > 0.
InvariantReport check_cauchy_schwarz(const Kernel& kernel, int dim,
                                     long n_samples, std::uint64_t seed);

// --- Trajectory-level suites ------------------------------------------------

// The full inner-product identity behind the stepsize rules, probed at
// random feasible points and random theta >= 0 along a recorded run.
InvariantReport check_main_identity(const Kernel& kernel,
                                    const ProblemInstance& problem,
                                    const Trajectory& traj, int n_probes,
                                    std::uint64_t seed);

enum class MeritKind { BregmanYoung, SymmetryFne };

// Merit value U_k(x) at iterate index k >= 1 of a recorded trajectory.
double merit_value(const Kernel& kernel, const ProblemInstance& problem,
                   const Trajectory& traj, long k, const VectorXd& x,
                   MeritKind kind);

// Monotone decrease of the controller-matched merit along the trajectory.
// Marked inapplicable (not failed) when x_star is not interior.
InvariantReport check_merit_descent(const Kernel& kernel,
                                    const ProblemInstance& problem,
                                    const Trajectory& traj,
                                    const VectorXd& x_star, MeritKind kind);

// |Lambda - 1| on pairs (x0, bpg_step(x0, gamma)) over a shrinking gamma
// grid, delta fixed by the growth rule.
std::vector<double> lambda_limit_values(const Kernel& kernel,
                                        const ProblemInstance& problem,
                                        const VectorXd& x0,
                                        std::span<const double> gamma_grid);

InvariantReport check_lambda_limit(const Kernel& kernel,
                                   const ProblemInstance& problem,
                                   const VectorXd& x0,
                                   std::span<const double> gamma_grid);

// B_{k+1} >= Dsym(x^{k+1}, x^k) along recorded iterates.
InvariantReport check_fne_bound(const Kernel& kernel,
                                const ProblemInstance& problem,
                                const Trajectory& traj);

// rho_hat <= (1+sqrt(5))/2 + 1e-12 and rho <= rho_hat on every iteration.
InvariantReport check_ratio_caps(const Trajectory& traj);

// Best-so-far gap bound min_{k<=K} P_k(x) <= U_1(x) / (q gamma_1 rho_hat_1 +
// sum_{k=1..K+1} gamma_k) for every K along the trajectory.
InvariantReport check_rate_shape(const Kernel& kernel,
                                 const ProblemInstance& problem,
                                 const Trajectory& traj, const VectorXd& x,
                                 MeritKind kind);

// All kernel-level suites for one kernel id, as run by the validate CLI.
std::vector<InvariantReport> run_kernel_suites(const Kernel& kernel, int dim,
                                               long n_samples,
                                               std::uint64_t seed);

}  // namespace bregman
