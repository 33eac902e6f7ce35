#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "bregman/harness.hpp"
#include "bregman/validation.hpp"
#include "test_support.hpp"

using namespace bregman;

TEST_CASE("bregman-young suite passes per kernel, including the delta "
          "stress") {
  for (const char* id : {"euclidean", "entropy", "quartic"}) {
    const auto k = make_kernel(id);
    const InvariantReport rep = check_bregman_young(*k, 6, 10000, 3);
    INFO(id, " worst=", rep.worst_violation);
    CHECK(rep.pass);
    CHECK(rep.samples == 10000);
  }
  const auto quad = make_run_kernel("quadratic", 6, 9);
  CHECK(check_bregman_young(*quad, 6, 10000, 3).pass);
}

TEST_CASE("cauchy-schwarz suite per kernel") {
  for (const char* id : {"euclidean", "quartic"}) {
    const auto k = make_kernel(id);
    const InvariantReport rep = check_cauchy_schwarz(*k, 5, 1000, 5);
    INFO(id);
    CHECK(rep.pass);
    CHECK(rep.skipped == 0);  // open domain: delta* always exists
  }
  const auto entropy = make_kernel("entropy");
  CHECK(check_cauchy_schwarz(*entropy, 5, 1000, 5).pass);
}

TEST_CASE("main identity: zero nonsmooth part and theta = 0 probes") {
  ProblemInstance p = poly_hessian_instance(20, 10, 4);
  RunOptions opts;
  opts.controller = Controller::BAdaPG;
  opts.budget = 120;
  const Trajectory t = run(*p.kernel, p, opts);

  const InvariantReport rep = check_main_identity(*p.kernel, p, t, 40, 9);
  CHECK(rep.applicable);
  CHECK(rep.pass);
  CHECK(rep.samples > 0);

  // too-short trajectories are inapplicable, not failed
  Trajectory stub;
  stub.iterates = {p.feasible_start};
  const InvariantReport short_rep =
      check_main_identity(*p.kernel, p, stub, 5, 1);
  CHECK_FALSE(short_rep.applicable);
  CHECK(short_rep.pass);
}

TEST_CASE("main identity along an l1 trajectory") {
  ProblemInstance p = lasso_instance(16, 9, 0.05, "quartic", 6);
  RunOptions opts;
  opts.controller = Controller::BAdaPG;
  opts.budget = 150;
  const Trajectory t = run(*p.kernel, p, opts);
  const InvariantReport rep = check_main_identity(*p.kernel, p, t, 30, 10);
  CHECK(rep.pass);
}

TEST_CASE("merit descent: boundary reference is inapplicable") {
  ProblemInstance p = logdet_simplex_instance(2, 5, 8);
  RunOptions opts;
  opts.controller = Controller::BAdaPG;
  opts.budget = 200;
  const Trajectory t = run(*p.kernel, p, opts);
  VectorXd boundary = VectorXd::Constant(5, 0.25);
  boundary[0] = 0.0;
  const InvariantReport rep = check_merit_descent(
      *p.kernel, p, t, boundary, MeritKind::BregmanYoung);
  CHECK_FALSE(rep.applicable);
  CHECK(rep.pass);
}

TEST_CASE("lambda limit: linear f on the Euclidean kernel is identically 1") {
  ProblemInstance p = lasso_instance(6, 4, 0.0, "euclidean", 11);
  p.f_value = [](const VectorXd& x) { return x.sum(); };
  p.f_gradient = [](const VectorXd& x) {
    return VectorXd(VectorXd::Ones(x.size()));
  };
  const std::array<double, 6> grid = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  const auto vals = lambda_limit_values(*p.kernel, p, p.feasible_start, grid);
  for (double v : vals) CHECK(v <= 1e-12);
}

TEST_CASE("lambda limit decays on the non-Euclidean kernels") {
  const std::array<double, 6> grid = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};

  ProblemInstance poly = poly_hessian_instance(10, 20, 12);
  const InvariantReport quartic_rep =
      check_lambda_limit(*poly.kernel, poly, poly.feasible_start, grid);
  INFO("quartic: ", quartic_rep.context);
  CHECK(quartic_rep.pass);

  ProblemInstance kl = kl_regression_instance(12, 18, 0.001, 13);
  const InvariantReport entropy_rep =
      check_lambda_limit(*kl.kernel, kl, kl.feasible_start, grid);
  INFO("entropy: ", entropy_rep.context);
  CHECK(entropy_rep.pass);
}

TEST_CASE("fne bound and ratio caps run on recorded trajectories") {
  ProblemInstance p = kl_regression_instance(10, 8, 0.001, 14);
  RunOptions opts;
  opts.controller = Controller::BAdaPG;
  opts.budget = 250;
  const Trajectory t = run(*p.kernel, p, opts);
  CHECK(check_fne_bound(*p.kernel, p, t).pass);
  CHECK(check_ratio_caps(t).pass);
}

TEST_CASE("invariant report serializes to json") {
  InvariantReport rep;
  rep.name = "demo";
  rep.samples = 10;
  rep.threshold = 1e-9;
  rep.worst_violation = 2e-9;
  rep.pass = false;
  rep.context = "sample 3";
  const std::string j = rep.to_json();
  CHECK(j.find("\"name\":\"demo\"") != std::string::npos);
  CHECK(j.find("\"pass\":false") != std::string::npos);
  CHECK(j.find("sample 3") != std::string::npos);
}

TEST_CASE("kernel suite bundle used by the validate subcommand") {
  const auto k = make_kernel("quartic");
  const auto reports = run_kernel_suites(*k, 5, 500, 19);
  CHECK(reports.size() == 4);
  for (const auto& r : reports) {
    INFO(r.name);
    CHECK(r.pass);
  }
}
