// Command-line front end: solve/bench run experiment configs, validate runs
// the kernel invariant suites, polish refines an experiment minimum.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "bregman/harness.hpp"
#include "bregman/validation.hpp"

namespace {

int run_solve(const std::string& config_path, int workers) {
  const bregman::RunConfig cfg = bregman::parse_config(config_path);
  const bregman::ExperimentResult res = bregman::run_experiment(cfg, workers);
  for (const bregman::CellOutcome& cell : res.cells) {
    if (cell.failed) {
      std::cout << cell.controller << " seed " << cell.seed
                << " FAILED: " << cell.error << "\n";
    } else {
      std::cout << cell.controller << " seed " << cell.seed
                << " final_norm_cost=" << cell.final_norm_cost
                << " oracle_calls=" << cell.oracle_calls << " -> "
                << cell.csv_path << "\n";
    }
  }
  std::cout << "summary: " << res.summary_path << "\n";
  return res.failures == 0 ? 0 : 1;
}

int run_validate(const std::string& kernel_id, long samples, int dim,
                 std::uint64_t seed) {
  const auto kernel = bregman::make_run_kernel(kernel_id, dim, seed);
  const auto reports =
      bregman::run_kernel_suites(*kernel, dim, samples, seed);
  bool all_pass = true;
  for (const bregman::InvariantReport& r : reports) {
    std::cout << r.to_json() << "\n";
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

int run_polish(const std::string& trace_path, long budget) {
  std::ifstream in(trace_path);
  if (!in) {
    std::cerr << "cannot open " << trace_path << "\n";
    return 1;
  }
  nlohmann::json summary;
  in >> summary;

  const std::string family = summary.at("family");
  const std::string kernel_id = summary.at("kernel");
  const int m = summary.at("m");
  const int n = summary.at("n");
  const double lambda = summary.at("lambda");
  const double noise_scale = summary.value("noise_scale", 0.1);
  const std::string dataset = summary.value("dataset", std::string());

  nlohmann::json out = nlohmann::json::object();
  for (const auto& [seed_str, jp] : summary.at("polish").items()) {
    const std::uint64_t seed = std::stoull(seed_str);
    const bregman::ProblemInstance problem = bregman::build_instance(
        family, m, n, lambda, noise_scale, seed, kernel_id, dataset);
    const std::vector<double> xs = jp.at("best_x");
    Eigen::VectorXd best_x =
        Eigen::Map<const Eigen::VectorXd>(xs.data(), xs.size());
    const double best_cost = problem.cost(best_x);
    const long use_budget = budget > 0 ? budget : 10000;
    const bregman::PolishResult pol = bregman::polish_minimum(
        *problem.kernel, problem, best_x, best_cost, use_budget);
    nlohmann::json jr;
    jr["phi_min"] = pol.phi_min;
    jr["degraded"] = pol.degraded;
    jr["iterations"] = pol.iterations;
    out[seed_str] = std::move(jr);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Bregman proximal gradient solver harness"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 1;
  auto* solve = app.add_subcommand("solve", "run an experiment config");
  solve->add_option("--config", config_path, "config file")->required();

  auto* bench = app.add_subcommand(
      "bench", "run an experiment config with parallel cells");
  bench->add_option("--config", config_path, "config file")->required();
  bench->add_option("--workers", workers, "parallel cells");

  std::string kernel_id = "euclidean";
  long samples = 10000;
  int dim = 8;
  std::uint64_t seed = 1;
  auto* validate =
      app.add_subcommand("validate", "run kernel invariant suites");
  validate->add_option("--kernel", kernel_id,
                       "euclidean|quadratic|entropy|quartic")
      ->required();
  validate->add_option("--samples", samples, "samples per suite");
  validate->add_option("--dim", dim, "ambient dimension");
  validate->add_option("--seed", seed, "sampler seed");

  std::string trace_path;
  long polish_budget = 0;
  auto* polish =
      app.add_subcommand("polish", "refine the minimum of a past experiment");
  polish->add_option("--trace", trace_path, "summary.json of the experiment")
      ->required();
  polish->add_option("--budget", polish_budget, "linesearch iterations");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return run_solve(config_path, 1);
    if (bench->parsed()) return run_solve(config_path, workers);
    if (validate->parsed())
      return run_validate(kernel_id, samples, dim, seed);
    if (polish->parsed()) return run_polish(trace_path, polish_budget);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
