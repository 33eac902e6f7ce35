#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bregman/solvers.hpp"

namespace bregman {

// One experiment description: (controllers x seeds) cells over a problem
// family, parsed from a flat key=value file with [section] headers.
struct RunConfig {
  // [problem]
  std::string family = "poly_hessian";
  int m = 30;
  int n = 50;
  double lambda = 0.0;
  double noise_scale = 0.1;
  std::vector<std::uint64_t> seeds = {1};
  std::string dataset;

  // [run]
  std::string kernel = "quartic";
  std::vector<std::string> controllers = {"b-adapg"};
  long budget = 10000;
  std::optional<double> target;  // normalized-cost target (reported post hoc)
  double epsilon = 0.0;
  std::optional<double> gamma_init;
  long polish_budget = 0;  // 0 = 10 x budget

  // [output]
  std::string outdir = "out";
};

RunConfig parse_config(const std::string& path);

// Output root: $BPG_OUT_ROOT when set, else the config's outdir as given.
std::string resolve_outdir(const RunConfig& cfg);

struct PolishResult {
  double phi_min = 0.0;
  VectorXd x_star;
  bool degraded = false;  // linesearch stalled before the budget
  long iterations = 0;
};

// Refines the experiment minimum by running the linesearch method from the
// best iterate seen; never increases the recorded minimum.
PolishResult polish_minimum(const Kernel& kernel,
                            const ProblemInstance& problem,
                            const VectorXd& best_x, double best_cost,
                            long budget);

// Fills norm_cost = (cost - phi_min) / (cost_0 - phi_min) on every record.
void normalize_trace(Trajectory& traj, double phi_min);

// Fixed schema: one "# fevals=N" note line, then
// iter,oracle_calls,cost,norm_cost,gamma,rho_hat,ell,lambda,a,branch,time_s.
// Byte-identical across reruns apart from the time_s column.
std::string trace_csv(const Trajectory& traj);

struct CellOutcome {
  std::string controller;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::string csv_path;
  double final_cost = 0.0;
  double final_norm_cost = 0.0;
  double best_cost = 0.0;
  long oracle_calls = 0;
  long fevals = 0;
  long calls_to_target = -1;  // first oracle count at the normalized target
  double mean_gamma = 0.0;
  double median_gamma = 0.0;
  std::optional<double> mean_gamma_modulus;  // mean gamma * L, modulus known
  bool hit_target = false;
};

struct ExperimentResult {
  std::vector<CellOutcome> cells;
  std::map<std::uint64_t, double> phi_min;  // per seed group
  std::string summary_path;
  int failures = 0;
};

// Runs every (controller x seed) cell, polishes the per-seed minimum,
// writes one CSV per cell plus summary.json. Cells run in parallel up to
// `workers`; each cell owns its outputs.
ExperimentResult run_experiment(const RunConfig& cfg, int workers = 1);

}  // namespace bregman
