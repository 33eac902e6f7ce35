#include "bregman/solvers.hpp"

#include <chrono>
#include <cmath>

#include "bregman/rng.hpp"

namespace bregman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

const char* branch_label(StepBranch b) {
  return b == StepBranch::UnconstrainedGrowth ? "unconstrained-growth"
                                              : "curvature-limited";
}

double positive_bracket(const LocalEstimates& est, double gamma) {
  const double t = est.lambda - (1.0 - gamma * est.ell);
  return t > 0.0 ? t : 0.0;
}

StepsizeDecision finish_badapg(double gamma_k, double rho_k,
                               const LocalEstimates& est, double epsilon) {
  const double rho_hat = std::sqrt(1.0 + rho_k);
  const double bracket = positive_bracket(est, gamma_k);
  const double second =
      bracket == 0.0
          ? kInf
          : (est.a / (1.0 + est.a)) / (2.0 * rho_hat * bracket);
  StepsizeDecision d;
  d.rho_hat_next = rho_hat;
  d.rho_next = std::min((1.0 - epsilon) * rho_hat, second);
  d.gamma_next = d.rho_next * gamma_k;
  d.estimates = est;
  d.branch = bracket == 0.0 ? StepBranch::UnconstrainedGrowth
                            : StepBranch::CurvatureLimited;
  return d;
}

StepsizeDecision finish_badapg_alpha(double gamma_k, double rho_k,
                                     double alpha, const LocalEstimates& est,
                                     double epsilon) {
  const double rho_hat = std::sqrt(0.5 * (1.0 + alpha) + rho_k);
  const double bracket = positive_bracket(est, gamma_k);
  const double second =
      bracket == 0.0 ? kInf : alpha / (2.0 * rho_hat * bracket);
  StepsizeDecision d;
  d.rho_hat_next = rho_hat;
  d.rho_next = std::min((1.0 - epsilon) * rho_hat, second);
  d.gamma_next = d.rho_next * gamma_k;
  d.estimates = est;
  d.branch = bracket == 0.0 ? StepBranch::UnconstrainedGrowth
                            : StepBranch::CurvatureLimited;
  return d;
}

StepsizeDecision finish_adapg(double gamma_k, double rho_k,
                              const LocalEstimates& est, double epsilon) {
  const double rho_hat = std::sqrt(1.0 + rho_k);
  const double bracket = positive_bracket(est, gamma_k);
  const double second = bracket == 0.0 ? kInf : 0.5 / std::sqrt(bracket);
  StepsizeDecision d;
  d.rho_hat_next = rho_hat;
  d.rho_next = std::min((1.0 - epsilon) * rho_hat, second);
  d.gamma_next = d.rho_next * gamma_k;
  d.estimates = est;
  d.branch = bracket == 0.0 ? StepBranch::UnconstrainedGrowth
                            : StepBranch::CurvatureLimited;
  return d;
}

StepsizeDecision finish_adapg_1half(double gamma_k, double rho_k,
                                    const LocalEstimates& est,
                                    double epsilon) {
  const double rho_hat = std::sqrt(1.0 + rho_k);
  const double bracket = positive_bracket(est, gamma_k);
  const double second =
      bracket == 0.0 ? kInf : 1.0 / std::sqrt(2.0 * bracket);
  StepsizeDecision d;
  d.rho_hat_next = rho_hat;
  d.rho_next = std::min((1.0 - epsilon) * rho_hat, second);
  d.gamma_next = d.rho_next * gamma_k;
  d.estimates = est;
  d.branch = bracket == 0.0 ? StepBranch::UnconstrainedGrowth
                            : StepBranch::CurvatureLimited;
  return d;
}

void require_euclidean(const Kernel& kernel, const char* rule) {
  if (kernel.name() != "euclidean")
    throw config_error(std::string(rule) + " requires the Euclidean kernel");
}

double rho_of(const SolverState& s) {
  return s.snap.gamma_curr / s.gamma_prev;
}

}  // namespace

bool interior_with_margin(const Kernel& kernel, const VectorXd& x) {
  if (!kernel.is_interior(x)) return false;
  if (kernel.domain() == KernelDomain::NonnegativeOrthant)
    return x.minCoeff() >= kDegeneratePairEps;
  return true;
}

namespace {
// A step below a few ulp of the iterate scale is indistinguishable from
// rounding jitter; every local estimate computed from such a pair is noise.
bool step_at_working_precision(const VectorXd& x_curr,
                               const VectorXd& x_next) {
  const double step = (x_next - x_curr).lpNorm<Eigen::Infinity>();
  return step <= 4.0 * std::numeric_limits<double>::epsilon() *
                     (1.0 + x_curr.lpNorm<Eigen::Infinity>());
}
}  // namespace

Controller controller_from_string(const std::string& id) {
  if (id == "b-adapg") return Controller::BAdaPG;
  if (id == "b-adapg-alpha") return Controller::BAdaPGAlpha;
  if (id == "adapg") return Controller::AdaPG;
  if (id == "adapg-1-half") return Controller::AdaPG1Half;
  if (id == "bpg-ls") return Controller::BPGLinesearch;
  if (id == "bagraal") return Controller::BaGRAAL;
  throw config_error("unknown controller id: " + id);
}

std::string controller_name(Controller c) {
  switch (c) {
    case Controller::BAdaPG: return "b-adapg";
    case Controller::BAdaPGAlpha: return "b-adapg-alpha";
    case Controller::AdaPG: return "adapg";
    case Controller::AdaPG1Half: return "adapg-1-half";
    case Controller::BPGLinesearch: return "bpg-ls";
    case Controller::BaGRAAL: return "bagraal";
  }
  throw config_error("bad controller enum");
}

StepsizeDecision badapg_stepsize(const Kernel& kernel, const SolverState& s,
                                 double epsilon, EstimateCounters* counters) {
  const double rho_k = rho_of(s);
  const double delta = 2.0 * std::sqrt(1.0 + rho_k);
  const LocalEstimates est = local_estimates(kernel, s.snap, delta, counters);
  return finish_badapg(s.snap.gamma_curr, rho_k, est, epsilon);
}

StepsizeDecision badapg_alpha_stepsize(const Kernel& kernel,
                                       const SolverState& s, double alpha,
                                       double epsilon,
                                       EstimateCounters* counters) {
  if (!(alpha > 0.0))
    throw config_error("b-adapg-alpha requires a positive symmetry coefficient");
  const double rho_k = rho_of(s);
  const double rho_hat = std::sqrt(0.5 * (1.0 + alpha) + rho_k);
  const double delta = 2.0 / (1.0 + alpha) * rho_hat;
  const LocalEstimates est = local_estimates(kernel, s.snap, delta, counters);
  return finish_badapg_alpha(s.snap.gamma_curr, rho_k, alpha, est, epsilon);
}

StepsizeDecision adapg_stepsize(const Kernel& kernel, const SolverState& s,
                                double epsilon, EstimateCounters* counters) {
  require_euclidean(kernel, "adapg");
  const double rho_k = rho_of(s);
  const double delta = 2.0 * std::sqrt(1.0 + rho_k);  // Lambda is delta-free here
  const LocalEstimates est = local_estimates(kernel, s.snap, delta, counters);
  return finish_adapg(s.snap.gamma_curr, rho_k, est, epsilon);
}

StepsizeDecision adapg_1half_stepsize(const Kernel& kernel,
                                      const SolverState& s, double epsilon,
                                      EstimateCounters* counters) {
  require_euclidean(kernel, "adapg-1-half");
  const double rho_k = rho_of(s);
  const double delta = 2.0 * std::sqrt(1.0 + rho_k);
  const LocalEstimates est = local_estimates(kernel, s.snap, delta, counters);
  return finish_adapg_1half(s.snap.gamma_curr, rho_k, est, epsilon);
}

VectorXd bpg_step(const Kernel& kernel, const ProblemInstance& problem,
                  const VectorXd& x, double gamma) {
  if (!(gamma > 0.0)) throw config_error("bpg_step: gamma must be positive");
  if (!kernel.is_interior(x))
    throw domain_error("bpg_step: x must be interior");
  return problem.prox(x, problem.f_gradient(x), gamma);
}

VectorXd bpg_step_with_grad(const ProblemInstance& problem, const VectorXd& x,
                            const VectorXd& grad_fx, double gamma) {
  return problem.prox(x, grad_fx, gamma);
}

LinesearchStep bpg_linesearch_step(const Kernel& kernel,
                                   const ProblemInstance& problem,
                                   const VectorXd& x, const VectorXd& grad_fx,
                                   double f_x, double last_accepted_gamma) {
  double gamma = 1.2 * last_accepted_gamma;
  LinesearchStep out;
  while (true) {
    bool ok = true;
    VectorXd x_plus;
    double lhs = 0.0;
    try {
      x_plus = problem.prox(x, grad_fx, gamma);
      ++out.fevals;
      lhs = problem.f_value(x_plus);
    } catch (const numerical_error&) {
      ok = false;  // trial stepsize not evaluable: treat as rejected
    } catch (const domain_error&) {
      ok = false;
    }
    if (ok) {
      const double rhs = f_x + grad_fx.dot(x_plus - x) +
                         kernel.bregman(x_plus, x) / gamma +
                         1e-12 * (1.0 + std::abs(f_x));
      if (lhs <= rhs) {
        out.x = std::move(x_plus);
        out.gamma = gamma;
        return out;
      }
    }
    gamma *= 0.5;
    if (gamma < 1e-16)
      throw linesearch_stall_error("linesearch stepsize underflow");
  }
}

StepsizeInit initialize_stepsizes(const Kernel& kernel,
                                  const ProblemInstance& problem,
                                  const VectorXd& x0,
                                  std::optional<double> gamma_init_opt) {
  if (!kernel.is_interior(x0))
    throw domain_error("initialize_stepsizes: x0 must be interior");
  double gamma_init = gamma_init_opt.value_or(
      problem.global_modulus ? 1.0 / *problem.global_modulus : 1.0);
  if (!(gamma_init > 0.0))
    throw config_error("initialize_stepsizes: gamma_init must be positive");

  StepsizeInit init;
  const VectorXd grad0 = problem.f_gradient(x0);
  init.grad_evals = 1;
  init.charge_gammas.push_back(gamma_init);
  const VectorXd mirror0 = kernel.gradient(x0);

  constexpr int kMaxRounds = 20;
  while (true) {
    ++init.rounds;
    const VectorXd xt = problem.prox(x0, grad0, gamma_init);
    const VectorXd gradt = problem.f_gradient(xt);
    ++init.grad_evals;
    init.charge_gammas.push_back(gamma_init);

    const double dsym = (kernel.gradient(xt) - mirror0).dot(xt - x0);
    double ell0 = 0.0;
    if (dsym >= kDegeneratePairEps)
      ell0 = std::max(0.0, (gradt - grad0).dot(xt - x0) / dsym);
    if (ell0 <= 0.0) {
      // flat segment: no curvature information, keep the current guess
      init.gamma0 = gamma_init;
      init.ell0 = 0.0;
      break;
    }
    init.ell0 = ell0;
    init.gamma0 = 1.0 / ell0;
    if (init.gamma0 < 0.1 * gamma_init) {
      if (init.rounds >= kMaxRounds)
        throw initialization_error(
            "stepsize initialization did not settle; last gamma0 = " +
            std::to_string(init.gamma0));
      gamma_init = init.gamma0;
      continue;
    }
    break;
  }

  // gamma0 * sqrt(1 + gamma0/gamma_minus1) >= 1/(2 ell0) holds for the
  // choice gamma_minus1 = gamma0 since gamma0 * ell0 = 1 here.
  init.gamma_minus1 = init.gamma0;
  init.x1 = problem.prox(x0, grad0, init.gamma0);
  init.grad_x0 = grad0;
  return init;
}

// ---------------------------------------------------------------------------
// Run driver

namespace {

struct RunContext {
  RunContext(const Kernel& k, const ProblemInstance& p, const RunOptions& o)
      : kernel(k), problem(p), opts(o) {}

  const Kernel& kernel;
  const ProblemInstance& problem;
  const RunOptions& opts;
  Trajectory traj;
  std::chrono::steady_clock::time_point t0 =
      std::chrono::steady_clock::now();

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  }

  void note_cost(double cost, const VectorXd& x) {
    if (cost < traj.best_cost) {
      traj.best_cost = cost;
      traj.best_x = x;
    }
  }

  TraceRecord& emit(long iter, double cost, double gamma, double rho_hat,
                    const char* branch) {
    TraceRecord r;
    r.iter = iter;
    r.oracle_calls = traj.oracle_calls;
    r.cost = cost;
    r.gamma = gamma;
    r.rho_hat = rho_hat;
    r.branch = branch;
    r.time_s = elapsed();
    traj.records.push_back(std::move(r));
    return traj.records.back();
  }

  bool hit_target(double cost) const {
    return opts.target_cost && cost <= *opts.target_cost;
  }
};

void check_compat(const Kernel& kernel, const ProblemInstance& problem,
                  const RunOptions& opts) {
  if (kernel.name() != problem.kernel_id)
    throw config_error("kernel '" + std::string(kernel.name()) +
                       "' does not match instance kernel '" +
                       problem.kernel_id + "'");
  switch (opts.controller) {
    case Controller::BAdaPGAlpha:
      if (!kernel.symmetry_coefficient() ||
          *kernel.symmetry_coefficient() <= 0.0)
        throw config_error(
            "b-adapg-alpha requires a kernel with positive symmetry "
            "coefficient");
      break;
    case Controller::AdaPG:
    case Controller::AdaPG1Half:
      require_euclidean(kernel, "adapg");
      break;
    case Controller::BaGRAAL:
      if (!kernel.strong_convexity_modulus())
        throw config_error(
            "bagraal requires a kernel with a strong convexity modulus");
      break;
    default:
      break;
  }
}

StepsizeDecision decide(const Kernel& kernel, Controller c,
                        const SolverState& state, double epsilon,
                        EstimateCounters* counters) {
  switch (c) {
    case Controller::BAdaPG:
      return badapg_stepsize(kernel, state, epsilon, counters);
    case Controller::BAdaPGAlpha:
      return badapg_alpha_stepsize(
          kernel, state, kernel.symmetry_coefficient().value(), epsilon,
          counters);
    case Controller::AdaPG:
      return adapg_stepsize(kernel, state, epsilon, counters);
    case Controller::AdaPG1Half:
      return adapg_1half_stepsize(kernel, state, epsilon, counters);
    default:
      throw config_error("decide: not an estimate-based controller");
  }
}

// Decision from frozen estimates once the pair has collapsed.
StepsizeDecision decide_frozen(const Kernel& kernel, Controller c,
                               const SolverState& state,
                               const LocalEstimates& est, double epsilon) {
  const double rho_k = rho_of(state);
  const double gamma_k = state.snap.gamma_curr;
  switch (c) {
    case Controller::BAdaPG:
      return finish_badapg(gamma_k, rho_k, est, epsilon);
    case Controller::BAdaPGAlpha:
      return finish_badapg_alpha(gamma_k, rho_k,
                                 kernel.symmetry_coefficient().value(), est,
                                 epsilon);
    case Controller::AdaPG:
      return finish_adapg(gamma_k, rho_k, est, epsilon);
    case Controller::AdaPG1Half:
      return finish_adapg_1half(gamma_k, rho_k, est, epsilon);
    default:
      throw config_error("decide_frozen: not an estimate-based controller");
  }
}

void run_adaptive_or_ls(RunContext& ctx, const VectorXd& x0) {
  const Kernel& kernel = ctx.kernel;
  const ProblemInstance& problem = ctx.problem;
  const RunOptions& opts = ctx.opts;
  Trajectory& traj = ctx.traj;
  const bool linesearch = opts.controller == Controller::BPGLinesearch;

  const double cost0 = problem.cost(x0);
  ctx.note_cost(cost0, x0);

  const StepsizeInit init =
      initialize_stepsizes(kernel, problem, x0, opts.gamma_init);
  traj.init_rounds = init.rounds;
  for (long i = 0; i < init.grad_evals; ++i) {
    ++traj.oracle_calls;
    ctx.emit(0, cost0, init.charge_gammas[static_cast<std::size_t>(i)], kNan,
             "init");
  }

  traj.gammas = {init.gamma_minus1, init.gamma0};
  traj.rho_hats = {kNan, std::sqrt(1.0 + init.gamma0 / init.gamma_minus1)};
  if (opts.record_iterates) traj.iterates = {x0, init.x1};

  VectorXd x_prev = x0;
  VectorXd x_curr = init.x1;
  VectorXd grad_prev = init.grad_x0;
  VectorXd mirror_prev = kernel.gradient(x_prev);
  double gamma_prev = init.gamma_minus1;
  double gamma_curr = init.gamma0;
  double rho_hat_curr = traj.rho_hats[1];
  double last_accepted = init.gamma0;
  LocalEstimates frozen;  // defaults cover a start at the minimizer
  frozen.a = 1.0;

  for (long k = 1;; ++k) {
    if (traj.oracle_calls >= opts.budget) break;
    const VectorXd grad_curr = problem.f_gradient(x_curr);
    ++traj.oracle_calls;
    const double f_curr = problem.f_value(x_curr);
    const double cost_curr = f_curr + problem.g_value(x_curr);
    ctx.note_cost(cost_curr, x_curr);

    const VectorXd mirror_curr = kernel.gradient(x_curr);
    double gamma_next = 0.0;
    VectorXd x_next;

    if (linesearch) {
      TraceRecord& row =
          ctx.emit(k, cost_curr, gamma_curr, kNan, "ls");
      (void)row;
      if (ctx.hit_target(cost_curr)) {
        traj.hit_target = true;
        break;
      }
      LinesearchStep step = bpg_linesearch_step(kernel, problem, x_curr,
                                                grad_curr, f_curr,
                                                last_accepted);
      traj.fevals += step.fevals;
      gamma_next = step.gamma;
      last_accepted = step.gamma;
      x_next = std::move(step.x);
      traj.rho_hats.push_back(kNan);
    } else {
      SolverState state;
      state.snap = IterPairSnapshot{x_prev,      x_curr,    grad_prev,
                                    grad_curr,   mirror_prev, mirror_curr,
                                    gamma_curr};
      state.gamma_prev = gamma_prev;
      state.rho_hat_curr = rho_hat_curr;
      state.iter = k;
      state.oracle_calls = traj.oracle_calls;

      StepsizeDecision d;
      bool converged = false;
      try {
        d = decide(kernel, opts.controller, state, opts.epsilon,
                   &traj.counters);
        frozen = d.estimates;
      } catch (const degenerate_pair_error&) {
        // iterates coincide: fixed point reached; freeze the diagnostics
        d = decide_frozen(kernel, opts.controller, state, frozen,
                          opts.epsilon);
        converged = true;
      }

      TraceRecord& row = ctx.emit(k, cost_curr, gamma_curr, rho_hat_curr,
                                  branch_label(d.branch));
      row.ell = d.estimates.ell;
      row.lambda = d.estimates.lambda;
      row.a = d.estimates.a;
      if (ctx.hit_target(cost_curr)) {
        traj.hit_target = true;
        break;
      }
      if (converged) break;
      gamma_next = d.gamma_next;
      rho_hat_curr = d.rho_hat_next;
      x_next = bpg_step_with_grad(problem, x_curr, grad_curr, gamma_next);
      traj.rho_hats.push_back(d.rho_hat_next);
    }

    if (step_at_working_precision(x_curr, x_next)) break;  // converged
    if (!interior_with_margin(kernel, x_next))
      break;  // a coordinate underflowed to the boundary; mirror
              // coordinates saturate and the geometry is exhausted

    traj.gammas.push_back(gamma_next);
    if (opts.record_iterates) traj.iterates.push_back(x_next);

    x_prev = std::move(x_curr);
    x_curr = std::move(x_next);
    grad_prev = grad_curr;
    mirror_prev = mirror_curr;
    gamma_prev = gamma_curr;
    gamma_curr = gamma_next;
  }
}

void run_bagraal(RunContext& ctx, const VectorXd& x0) {
  const Kernel& kernel = ctx.kernel;
  const ProblemInstance& problem = ctx.problem;
  const RunOptions& opts = ctx.opts;
  Trajectory& traj = ctx.traj;

  const double sigma = kernel.strong_convexity_modulus().value();
  constexpr double kNu = 1.5;
  constexpr double kGrowth = 1.0 / kNu + 1.0 / (kNu * kNu);
  constexpr double kGammaMax = 1e6;

  const double cost0 = problem.cost(x0);
  ctx.note_cost(cost0, x0);

  // Initial stepsize from a local Lipschitz estimate at a perturbed point.
  Rng rng(substream(opts.seed, 0x6a11));
  const VectorXd grad0 = problem.f_gradient(x0);
  ++traj.oracle_calls;
  VectorXd dir = rng.normal_vector(static_cast<int>(x0.size()));
  dir *= 1e-6 * (1.0 + x0.norm()) / dir.norm();
  const VectorXd x_pert = x0 + dir;
  const VectorXd grad_pert = problem.f_gradient(x_pert);
  ++traj.oracle_calls;
  const double l0 = (grad0 - grad_pert).norm() / dir.norm();
  const double gamma0 = l0 > 0.0 ? 1.0 / l0 : 1.0;
  ctx.emit(0, cost0, gamma0, kNan, "init");
  ctx.emit(0, cost0, gamma0, kNan, "init");

  VectorXd xbar_mirror = kernel.gradient(x0);
  VectorXd x_prev = x0;
  VectorXd grad_prev = grad0;
  VectorXd x_curr = problem.prox(x0, grad0, gamma0);
  xbar_mirror = ((kNu - 1.0) * kernel.gradient(x_curr) + xbar_mirror) / kNu;
  double gamma_prev = gamma0;
  double gamma_curr = gamma0;

  traj.gammas = {gamma0, gamma0};
  traj.rho_hats = {kNan, kNan};
  if (opts.record_iterates) traj.iterates = {x0, x_curr};

  for (long k = 1;; ++k) {
    if (traj.oracle_calls >= opts.budget) break;
    const VectorXd grad_curr = problem.f_gradient(x_curr);
    ++traj.oracle_calls;
    const double cost_curr = problem.cost(x_curr);
    ctx.note_cost(cost_curr, x_curr);
    ctx.emit(k, cost_curr, gamma_curr, kNan, "graal");
    if (ctx.hit_target(cost_curr)) {
      traj.hit_target = true;
      break;
    }

    const double rho_k = kNu * gamma_curr / gamma_prev;
    const double dg2 = (grad_curr - grad_prev).squaredNorm();
    const double mid =
        dg2 > 0.0 ? sigma * kNu * rho_k * (x_curr - x_prev).squaredNorm() /
                        (4.0 * gamma_curr * dg2)
                  : kInf;
    const double gamma_next =
        std::min({kGrowth * gamma_curr, mid, kGammaMax});

    const VectorXd xbar = kernel.mirror_inverse(xbar_mirror);
    VectorXd x_next = problem.prox(xbar, grad_curr, gamma_next);
    if (step_at_working_precision(x_curr, x_next) ||
        !interior_with_margin(kernel, x_next))
      break;
    xbar_mirror = ((kNu - 1.0) * kernel.gradient(x_next) + xbar_mirror) / kNu;

    traj.gammas.push_back(gamma_next);
    traj.rho_hats.push_back(kNan);
    if (opts.record_iterates) traj.iterates.push_back(x_next);

    x_prev = std::move(x_curr);
    x_curr = std::move(x_next);
    grad_prev = grad_curr;
    gamma_prev = gamma_curr;
    gamma_curr = gamma_next;
  }
}

}  // namespace

Trajectory run(const Kernel& kernel, const ProblemInstance& problem,
               const RunOptions& opts, const VectorXd& x0) {
  check_compat(kernel, problem, opts);
  if (!kernel.is_interior(x0)) throw domain_error("run: x0 must be interior");

  RunContext ctx(kernel, problem, opts);
  ctx.traj.controller = opts.controller;
  if (opts.controller == Controller::BaGRAAL)
    run_bagraal(ctx, x0);
  else
    run_adaptive_or_ls(ctx, x0);
  return std::move(ctx.traj);
}

}  // namespace bregman
