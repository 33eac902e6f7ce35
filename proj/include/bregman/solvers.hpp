#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bregman/estimates.hpp"
#include "bregman/problems.hpp"

namespace bregman {

enum class Controller {
  BAdaPG,         // "b-adapg"
  BAdaPGAlpha,    // "b-adapg-alpha"
  AdaPG,          // "adapg"        (Euclidean kernel only)
  AdaPG1Half,     // "adapg-1-half" (Euclidean kernel only)
  BPGLinesearch,  // "bpg-ls"
  BaGRAAL,        // "bagraal"
};

Controller controller_from_string(const std::string& id);
std::string controller_name(Controller c);

enum class StepBranch { UnconstrainedGrowth, CurvatureLimited };

struct StepsizeDecision {
  double gamma_next = 0.0;
  double rho_next = 0.0;
  double rho_hat_next = 0.0;
  LocalEstimates estimates;
  StepBranch branch = StepBranch::UnconstrainedGrowth;
};

struct SolverState {
  IterPairSnapshot snap;      // x_{k-1}, x_k, gradients, mirrors, gamma_k
  double gamma_prev = 0.0;    // gamma_{k-1}
  double rho_hat_curr = 0.0;  // rho_hat_k
  long iter = 0;
  long oracle_calls = 0;
};

// --- Stepsize rules -------------------------------------------------------
// Each consumes the last two iterates and returns the next stepsize with the
// diagnostics that produced it. `epsilon` dampens the growth branch to
// (1 - epsilon) * rho_hat; 0 reproduces the plain rules.

StepsizeDecision badapg_stepsize(const Kernel& kernel, const SolverState& s,
                                 double epsilon = 0.0,
                                 EstimateCounters* counters = nullptr);

// Requires the kernel's symmetry coefficient alpha > 0.
StepsizeDecision badapg_alpha_stepsize(const Kernel& kernel,
                                       const SolverState& s, double alpha,
                                       double epsilon = 0.0,
                                       EstimateCounters* counters = nullptr);

StepsizeDecision adapg_stepsize(const Kernel& kernel, const SolverState& s,
                                double epsilon = 0.0,
                                EstimateCounters* counters = nullptr);

StepsizeDecision adapg_1half_stepsize(const Kernel& kernel,
                                      const SolverState& s,
                                      double epsilon = 0.0,
                                      EstimateCounters* counters = nullptr);

// --- Iteration primitives -------------------------------------------------

// One Bregman proximal gradient step from x with stepsize gamma; evaluates
// grad f(x) internally.
VectorXd bpg_step(const Kernel& kernel, const ProblemInstance& problem,
                  const VectorXd& x, double gamma);

// Same with the gradient already in hand (the solver loop caches it).
VectorXd bpg_step_with_grad(const ProblemInstance& problem, const VectorXd& x,
                            const VectorXd& grad_fx, double gamma);

struct LinesearchStep {
  VectorXd x;
  double gamma = 0.0;
  int fevals = 0;  // function-only evaluations, not oracle calls
};

// Warm-started backtracking: trial gamma = 1.2 x last accepted, halved until
// the relative-smoothness descent certificate holds.
LinesearchStep bpg_linesearch_step(const Kernel& kernel,
                                   const ProblemInstance& problem,
                                   const VectorXd& x, const VectorXd& grad_fx,
                                   double f_x, double last_accepted_gamma);

struct StepsizeInit {
  double gamma0 = 0.0;
  double gamma_minus1 = 0.0;
  VectorXd x1;
  VectorXd grad_x0;  // reusable; already charged to the oracle count
  double ell0 = 0.0;
  int rounds = 0;
  long grad_evals = 0;
  std::vector<double> charge_gammas;  // stepsize in effect per gradient eval
};

// Trial-step initialization: one BPG step, ell_0 from the pair, gamma_0 =
// 1/ell_0, with reset rounds while gamma_0 < 0.1 gamma_init (cap 20).
StepsizeInit initialize_stepsizes(const Kernel& kernel,
                                  const ProblemInstance& problem,
                                  const VectorXd& x0,
                                  std::optional<double> gamma_init = {});

// --- Run driver -----------------------------------------------------------

struct TraceRecord {
  long iter = 0;
  long oracle_calls = 0;
  double cost = 0.0;
  double norm_cost = std::numeric_limits<double>::quiet_NaN();  // post-polish
  double gamma = 0.0;
  double rho_hat = std::numeric_limits<double>::quiet_NaN();
  double ell = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double a = std::numeric_limits<double>::quiet_NaN();
  std::string branch;
  double time_s = 0.0;
};

struct Trajectory {
  Controller controller = Controller::BAdaPG;
  std::vector<TraceRecord> records;  // one per oracle call
  // X[0] = start; gammas[i] produced X[i] for i >= 1; gammas[0] holds the
  // virtual gamma_{-1}; rho_hats aligned with gammas (NaN where undefined).
  std::vector<VectorXd> iterates;
  std::vector<double> gammas;
  std::vector<double> rho_hats;
  long oracle_calls = 0;
  long fevals = 0;
  int init_rounds = 0;
  EstimateCounters counters;
  double best_cost = std::numeric_limits<double>::infinity();
  VectorXd best_x;
  bool hit_target = false;
};

struct RunOptions {
  Controller controller = Controller::BAdaPG;
  long budget = 1000;                 // max gradient-oracle calls
  std::optional<double> target_cost;  // absolute cost stop, if known
  double epsilon = 0.0;
  std::optional<double> gamma_init;
  bool record_iterates = true;
  std::uint64_t seed = 0;  // BaGRAAL perturbation only
};

// Interior with every coordinate above the degenerate threshold for
// orthant-domain kernels; iteration stops once an iterate leaves this set
// (mirror coordinates saturate there).
bool interior_with_margin(const Kernel& kernel, const VectorXd& x);

// Drives initialize -> {estimates -> decision -> step} until the budget or
// target; deterministic given the seed and options.
Trajectory run(const Kernel& kernel, const ProblemInstance& problem,
               const RunOptions& opts, const VectorXd& x0);

inline Trajectory run(const Kernel& kernel, const ProblemInstance& problem,
                      const RunOptions& opts) {
  return run(kernel, problem, opts, problem.feasible_start);
}

}  // namespace bregman
