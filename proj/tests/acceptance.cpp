// Acceptance suite: one line per criterion, exit code = number of failures.

#include <Eigen/SVD>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "bregman/harness.hpp"
#include "bregman/validation.hpp"
#include "test_support.hpp"

using namespace bregman;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %-28s %s\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

std::vector<std::unique_ptr<Kernel>> reference_kernels(int dim) {
  std::vector<std::unique_ptr<Kernel>> ks;
  ks.push_back(make_kernel("euclidean"));
  {
    Rng rng(404);
    const MatrixXd r = rng.normal_matrix(dim, dim);
    const MatrixXd q =
        r.transpose() * r / dim + 0.5 * MatrixXd::Identity(dim, dim);
    ks.push_back(std::make_unique<QuadraticKernel>(q));
  }
  ks.push_back(make_kernel("entropy"));
  ks.push_back(make_kernel("quartic"));
  return ks;
}

// ---------------------------------------------------------------------------

void criterion_1_bregman_young() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  bool pass = true;
  for (const auto& k : reference_kernels(8)) {
    const InvariantReport rep = check_bregman_young(*k, 8, 10000, 1001);
    worst = std::max(worst, rep.worst_violation);
    pass = pass && rep.pass;
  }
  const double dt = seconds_since(t0);
  pass = pass && dt < 10.0;
  report(1, "bregman-young suite", pass,
         fmt("worst=%.3e (gate 1e-10), %.2f s", worst, dt));
}

void criterion_2_duality_roundtrip() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  bool pass = true;
  for (const auto& k : reference_kernels(8)) {
    const InvariantReport rep = check_duality_roundtrip(*k, 8, 1000, 1002);
    worst = std::max(worst, rep.worst_violation);
    pass = pass && rep.pass;
  }
  const double dt = seconds_since(t0);
  pass = pass && dt < 5.0;
  report(2, "duality and round-trip", pass,
         fmt("worst=%.3e (gate 1e-10), %.2f s", worst, dt));
}

void criterion_3_main_identity() {
  const auto t0 = Clock::now();
  ProblemInstance p = poly_hessian_instance(30, 50, 42);
  RunOptions opts;
  opts.controller = Controller::BAdaPG;
  opts.budget = 205;  // ~200 recorded iterations after initialization
  const Trajectory traj = run(*p.kernel, p, opts);
  const InvariantReport rep =
      check_main_identity(*p.kernel, p, traj, 100, 1003);
  const double dt = seconds_since(t0);
  const bool pass = rep.pass && rep.samples >= 100 * 190 && dt < 30.0;
  report(3, "main identity", pass,
         fmt("worst=%.3e (gate 1e-8), %ld probe-iterations, %.2f s",
             rep.worst_violation, rep.samples, dt));
}

void criterion_4_quadratic_lambda_identity() {
  const int n = 20, m = 30;
  Rng rng(1004);
  // least squares with singular values spread over three decades so the
  // run keeps moving for the full window
  MatrixXd a = rng.normal_matrix(m, n);
  {
    Eigen::JacobiSVD<MatrixXd> svd(
        a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    VectorXd s(n);
    for (int i = 0; i < n; ++i)
      s[i] = std::pow(10.0, -3.5 * i / (n - 1.0));
    a = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  }
  const VectorXd b = a * rng.normal_vector(n) + 0.1 * rng.normal_vector(m);
  auto data_a = std::make_shared<MatrixXd>(a);
  auto data_b = std::make_shared<VectorXd>(b);

  ProblemInstance p;
  p.name = "ls_quadratic_kernel";
  p.m = m;
  p.n = n;
  p.seed = 1004;
  p.kernel_id = "quadratic";
  p.kernel = make_run_kernel("quadratic", n, 1004);
  p.f_value = [data_a, data_b](const VectorXd& x) {
    return 0.5 * (*data_a * x - *data_b).squaredNorm();
  };
  p.f_gradient = [data_a, data_b](const VectorXd& x) {
    return VectorXd(data_a->transpose() * (*data_a * x - *data_b));
  };
  p.g_value = [](const VectorXd&) { return 0.0; };
  p.prox = make_prox(p.kernel, NonsmoothKind::Zero, 0.0);
  p.g_kind = NonsmoothKind::Zero;
  p.feasible_start = VectorXd::Zero(n);

  RunOptions opts;
  opts.controller = Controller::BAdaPG;
  opts.budget = 520;
  const Trajectory traj = run(*p.kernel, p, opts);

  const auto* kq = dynamic_cast<const QuadraticKernel*>(p.kernel.get());
  const Eigen::LLT<MatrixXd> qllt(kq->q());

  double worst = 0.0;
  long checked = 0;
  for (std::size_t k = 1; k + 1 < traj.iterates.size(); ++k) {
    const VectorXd& xp = traj.iterates[k - 1];
    const VectorXd& xc = traj.iterates[k];
    const VectorXd dx = xc - xp;
    const VectorXd dg = p.f_gradient(xc) - p.f_gradient(xp);
    const double nx2 = dx.dot(kq->q() * dx);
    if (nx2 < 1e-280) continue;
    const double gamma = traj.gammas[k];
    IterPairSnapshot snap{xp,  xc, p.f_gradient(xp), p.f_gradient(xc),
                          kq->gradient(xp), kq->gradient(xc), gamma};
    const double rho = gamma / traj.gammas[k - 1];
    const double delta = 2.0 * std::sqrt(1.0 + rho);
    const double lam = curvature_estimate(*kq, snap, delta);
    const double ell = dg.dot(dx) / nx2;
    const double lk2 = dg.dot(qllt.solve(dg)) / nx2;
    const double expected = gamma * gamma * lk2 - 2.0 * gamma * ell + 1.0;
    worst = std::max(worst,
                     std::abs(lam - expected) / (1.0 + std::abs(lam)));
    ++checked;
  }
  const bool pass = worst <= 1e-9 && checked >= 500;
  report(4, "quadratic-kernel identity", pass,
         fmt("worst=%.3e (gate 1e-9) on %ld iterates", worst, checked));
}

void criterion_5_merit_monotonicity() {
  ProblemInstance p = poly_hessian_instance(50, 100, 43);
  const Kernel& k = *p.kernel;

  RunOptions opts;
  opts.controller = Controller::BAdaPG;
  opts.budget = 2010;
  const Trajectory by = run(k, p, opts);
  opts.controller = Controller::BAdaPGAlpha;
  const Trajectory fne = run(k, p, opts);

  const double best =
      std::min(by.best_cost, fne.best_cost);
  const VectorXd& best_x =
      by.best_cost <= fne.best_cost ? by.best_x : fne.best_x;
  const PolishResult pol = polish_minimum(k, p, best_x, best, 20000);

  const InvariantReport rep_by =
      check_merit_descent(k, p, by, pol.x_star, MeritKind::BregmanYoung);
  const InvariantReport rep_fne =
      check_merit_descent(k, p, fne, pol.x_star, MeritKind::SymmetryFne);
  const bool pass = rep_by.applicable && rep_by.pass && rep_fne.applicable &&
                    rep_fne.pass && rep_by.samples >= 1995 &&
                    rep_fne.samples >= 1995;
  report(5, "merit monotonicity", pass,
         fmt("BY worst=%.3e, FNE-alpha worst=%.3e (gate 1e-8, %ld/%ld steps)",
             rep_by.worst_violation, rep_fne.worst_violation, rep_by.samples,
             rep_fne.samples));
}

// Shared state for criteria 6-8.
struct FamilyRun {
  std::string family;
  ProblemInstance problem;
  Trajectory badapg;
  Trajectory ls;  // only when the comparison is requested
  bool with_ls = false;
  double phi_min = 0.0;
  long calls_badapg = -1;
  long calls_ls = -1;
};

long calls_to_target(const Trajectory& t, double phi_min, double target) {
  if (t.records.empty()) return -1;
  const double denom = std::max(t.records.front().cost - phi_min, 1e-300);
  for (const TraceRecord& r : t.records)
    if ((r.cost - phi_min) / denom <= target) return r.oracle_calls;
  return -1;
}

FamilyRun run_family(const std::string& family, int m, int n, double lambda,
                     const std::string& kernel, std::uint64_t seed,
                     bool with_ls) {
  FamilyRun out;
  out.family = family;
  out.problem = build_instance(family, m, n, lambda, 0.1, seed, kernel);
  out.with_ls = with_ls;
  const Kernel& k = *out.problem.kernel;

  RunOptions opts;
  opts.controller = Controller::BAdaPG;
  opts.budget = 10000;
  opts.record_iterates = false;
  opts.seed = seed;
  out.badapg = run(k, out.problem, opts);

  double best = out.badapg.best_cost;
  const VectorXd* best_x = &out.badapg.best_x;
  if (with_ls) {
    opts.controller = Controller::BPGLinesearch;
    out.ls = run(k, out.problem, opts);
    if (out.ls.best_cost < best) {
      best = out.ls.best_cost;
      best_x = &out.ls.best_x;
    }
  }
  const PolishResult pol = polish_minimum(k, out.problem, *best_x, best,
                                          20000);
  out.phi_min = pol.phi_min;
  out.calls_badapg = calls_to_target(out.badapg, pol.phi_min, 1e-6);
  if (with_ls) out.calls_ls = calls_to_target(out.ls, pol.phi_min, 1e-6);
  return out;
}

std::vector<FamilyRun> g_family_runs;

void criterion_6_convergence() {
  struct Family {
    const char* name;
    int m, n;
    double lambda;
    const char* kernel;
    bool with_ls;
  };
  const std::array<Family, 5> families = {{
      {"poly_hessian", 160, 80, 0.0, "quartic", true},
      {"kl_regression", 60, 100, 0.001, "entropy", false},
      {"logdet_simplex", 8, 50, 0.0, "entropy", false},
      {"lasso", 120, 80, 0.01, "euclidean", false},
      {"lasso", 120, 80, 0.01, "quartic", true},
  }};

  bool pass = true;
  std::string detail;
  for (const Family& fam : families) {
    int converged = 0, faster = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      FamilyRun fr = run_family(fam.name, fam.m, fam.n, fam.lambda,
                                fam.kernel, seed, fam.with_ls);
      if (fr.calls_badapg >= 0 && fr.calls_badapg <= 10000) ++converged;
      if (fam.with_ls) {
        const long lhs =
            fr.calls_badapg < 0 ? (1L << 30) : fr.calls_badapg;
        const long rhs = fr.calls_ls < 0 ? (1L << 30) : fr.calls_ls;
        if (lhs <= rhs) ++faster;
      }
      g_family_runs.push_back(std::move(fr));
    }
    const bool fam_ok =
        converged >= 4 && (!fam.with_ls || faster >= 4);
    pass = pass && fam_ok;
    detail += fmt("%s(%s):%d/5%s ", fam.name, fam.kernel, converged,
                  fam.with_ls ? fmt("+ls:%d/5", faster).c_str() : "");
  }
  report(6, "convergence at desk scale", pass, detail);
}

void criterion_7_stepsize_magnitude() {
  // mean gamma * L over iterations 50..250 of the seed-1 runs
  const auto window_mean_gl = [](const FamilyRun& fr) {
    const double l = fr.problem.global_modulus.value();
    double acc = 0.0;
    long cnt = 0;
    for (std::size_t i = 50; i <= 250 && i < fr.badapg.gammas.size(); ++i) {
      acc += fr.badapg.gammas[i] * l;
      ++cnt;
    }
    return cnt > 0 ? acc / cnt : 0.0;
  };
  double poly_gl = 0.0, kl_gl = 0.0;
  for (const FamilyRun& fr : g_family_runs) {
    if (fr.family == "poly_hessian" && poly_gl == 0.0)
      poly_gl = window_mean_gl(fr);
    if (fr.family == "kl_regression" && kl_gl == 0.0)
      kl_gl = window_mean_gl(fr);
  }
  const bool pass = poly_gl >= 100.0 && kl_gl >= 1.0;
  report(7, "stepsize magnitude", pass,
         fmt("poly mean gamma*L=%.3g (gate 100), kl mean gamma*L=%.3g "
             "(gate 1)",
             poly_gl, kl_gl));
}

void criterion_8_ratio_caps() {
  bool pass = true;
  double worst = -1e300;
  long runs = 0;
  for (const FamilyRun& fr : g_family_runs) {
    const InvariantReport rep = check_ratio_caps(fr.badapg);
    pass = pass && rep.pass;
    worst = std::max(worst, rep.worst_violation);
    ++runs;
  }
  report(8, "stepsize ratio caps", pass,
         fmt("worst excess=%.3e over %ld runs (gate 0)", worst, runs));
}

void criterion_9_prox_equivalence() {
  const std::array<const char*, 5> pairings = {
      "euclid+l1", "quartic+l1", "entropy+l1", "entropy+simplex",
      "quartic+zero"};

  bool pass = true;
  double worst_gap = 0.0, worst_sub = 0.0;
  long checked = 0;
  for (const char* pairing : pairings) {
    const std::string name = pairing;
    const bool simplex = name == "entropy+simplex";
    for (std::uint64_t i = 0; i < 100; ++i) {
      Rng rng(substream(1009, i * 131 + name[0]));
      // dimension <= 3; the simplex needs at least two coordinates
      const int dim = simplex ? 2 + static_cast<int>(rng.below(2))
                              : 1 + static_cast<int>(rng.below(3));
      const ProblemInstance p = [&] {
        if (name == "euclid+l1")
          return lasso_instance(4, dim, 0.1, "euclidean", i + 1);
        if (name == "quartic+l1")
          return lasso_instance(4, dim, 0.1, "quartic", i + 1);
        if (name == "entropy+l1")
          return kl_regression_instance(4, dim, 0.05, i + 1);
        if (name == "entropy+simplex")
          return logdet_simplex_instance(1, dim, i + 1);
        return poly_hessian_instance(4, dim, i + 1);
      }();
      ++checked;
      const Kernel& k = *p.kernel;
      VectorXd x(dim), v(dim);
      for (int j = 0; j < dim; ++j) {
        x[j] = k.domain() == KernelDomain::NonnegativeOrthant
                   ? rng.log_uniform(0.2, 2.0)
                   : rng.normal();
        v[j] = rng.normal();
      }
      if (p.g_kind == NonsmoothKind::SimplexIndicator) x /= x.sum();
      const double gamma = rng.log_uniform(0.05, 2.0);
      const VectorXd fast = p.prox(x, v, gamma);
      const VectorXd slow = testsupport::brute_force_prox(
          k, p.g_kind, p.g_lambda, x, v, gamma, 40);
      const double gap = (fast - slow).lpNorm<Eigen::Infinity>() /
                         (1.0 + fast.lpNorm<Eigen::Infinity>());
      const double sub = subgradient_residual(k, p, x, fast, v, gamma);
      worst_gap = std::max(worst_gap, gap);
      worst_sub = std::max(worst_sub, sub);
      pass = pass && gap <= 1e-5 && sub <= 1e-8;
    }
  }

  // subgradient inclusion along recorded BPG steps
  ProblemInstance p = lasso_instance(16, 10, 0.05, "quartic", 77);
  RunOptions opts;
  opts.controller = Controller::BAdaPG;
  opts.budget = 300;
  const Trajectory t = run(*p.kernel, p, opts);
  for (std::size_t i = 1; i + 1 < t.iterates.size(); ++i) {
    const double sub = subgradient_residual(
        *p.kernel, p, t.iterates[i], t.iterates[i + 1],
        p.f_gradient(t.iterates[i]), t.gammas[i + 1]);
    worst_sub = std::max(worst_sub, sub);
    pass = pass && sub <= 1e-8;
  }
  pass = pass && checked == 500;
  report(9, "prox oracle equivalence", pass,
         fmt("worst gap=%.3e (gate 1e-5), worst subgrad=%.3e (gate 1e-8), "
             "%ld instances",
             worst_gap, worst_sub, checked));
}

void criterion_10_lambda_limit() {
  const std::array<double, 6> grid = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  bool pass = true;
  std::string detail;

  ProblemInstance poly = poly_hessian_instance(10, 20, 45);
  const auto quartic_vals =
      lambda_limit_values(*poly.kernel, poly, poly.feasible_start, grid);
  ProblemInstance kl = kl_regression_instance(12, 18, 0.001, 46);
  const auto entropy_vals =
      lambda_limit_values(*kl.kernel, kl, kl.feasible_start, grid);

  for (const auto* vals : {&quartic_vals, &entropy_vals}) {
    bool decreasing = true;
    for (std::size_t i = 1; i < vals->size(); ++i)
      decreasing = decreasing && (*vals)[i] <= (*vals)[i - 1];
    pass = pass && decreasing && vals->back() <= 1e-3;
  }
  detail = fmt("quartic |L-1| @1e-6 = %.3e, entropy = %.3e (gate 1e-3)",
               quartic_vals.back(), entropy_vals.back());
  report(10, "lambda to one limit", pass, detail);
}

void criterion_11_euclidean_dominance() {
  ProblemInstance p = lasso_instance(120, 80, 0.01, "euclidean", 3);
  const Kernel& k = *p.kernel;

  long violations = 0, states = 0;
  for (const Controller c :
       {Controller::BAdaPG, Controller::BAdaPGAlpha}) {
    RunOptions opts;
    opts.controller = c;
    opts.budget = 2000;
    const Trajectory t = run(k, p, opts);
    for (std::size_t i = 1; i + 1 < t.iterates.size(); ++i) {
      SolverState s;
      s.snap = IterPairSnapshot{
          t.iterates[i - 1],               t.iterates[i],
          p.f_gradient(t.iterates[i - 1]), p.f_gradient(t.iterates[i]),
          t.iterates[i - 1],               t.iterates[i],
          t.gammas[i]};
      s.gamma_prev = t.gammas[i - 1];
      try {
        if (badapg_stepsize(k, s).rho_next >
            adapg_stepsize(k, s).rho_next * (1.0 + 1e-12))
          ++violations;
        if (badapg_alpha_stepsize(k, s, 1.0).rho_next >
            adapg_1half_stepsize(k, s).rho_next * (1.0 + 1e-12))
          ++violations;
        ++states;
      } catch (const degenerate_pair_error&) {
        break;
      }
    }
  }
  report(11, "euclidean dominance", violations == 0 && states > 100,
         fmt("%ld violations over %ld shared states", violations, states));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  criterion_1_bregman_young();
  criterion_2_duality_roundtrip();
  criterion_3_main_identity();
  criterion_4_quadratic_lambda_identity();
  criterion_5_merit_monotonicity();
  criterion_6_convergence();
  criterion_7_stepsize_magnitude();
  criterion_8_ratio_caps();
  criterion_9_prox_equivalence();
  criterion_10_lambda_limit();
  criterion_11_euclidean_dominance();
  std::printf("%d of 11 criteria passed in %.1f s\n", 11 - g_failures,
              seconds_since(t0));
  return g_failures;
}
