#include "bregman/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bregman/validation.hpp"

namespace bregman {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw parse_error("config: bad number for " + key + ": '" + v + "'");
  }
}

long to_long(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw parse_error("config: bad integer for " + key + ": '" + v + "'");
  }
}

}  // namespace

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open config " + path);

  RunConfig cfg;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw parse_error(path + ":" + std::to_string(lineno) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw parse_error(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qual = section + "." + key;

    if (qual == "problem.family") cfg.family = value;
    else if (qual == "problem.m") cfg.m = static_cast<int>(to_long(value, qual));
    else if (qual == "problem.n") cfg.n = static_cast<int>(to_long(value, qual));
    else if (qual == "problem.lambda") cfg.lambda = to_double(value, qual);
    else if (qual == "problem.noise_scale") cfg.noise_scale = to_double(value, qual);
    else if (qual == "problem.dataset") cfg.dataset = value;
    else if (qual == "problem.seed" || qual == "problem.seeds") {
      cfg.seeds.clear();
      for (const std::string& s : split_list(value))
        cfg.seeds.push_back(static_cast<std::uint64_t>(to_long(s, qual)));
      if (cfg.seeds.empty()) throw parse_error("config: empty seed list");
    } else if (qual == "run.kernel") cfg.kernel = value;
    else if (qual == "run.controller" || qual == "run.controllers") {
      cfg.controllers = split_list(value);
      if (cfg.controllers.empty())
        throw parse_error("config: empty controller list");
    } else if (qual == "run.budget") cfg.budget = to_long(value, qual);
    else if (qual == "run.target") cfg.target = to_double(value, qual);
    else if (qual == "run.epsilon") cfg.epsilon = to_double(value, qual);
    else if (qual == "run.gamma_init") cfg.gamma_init = to_double(value, qual);
    else if (qual == "run.polish_budget") cfg.polish_budget = to_long(value, qual);
    else if (qual == "output.dir") cfg.outdir = value;
    else
      throw parse_error(path + ":" + std::to_string(lineno) +
                        ": unknown key '" + qual + "'");
  }
  // fail fast on controller ids
  for (const std::string& c : cfg.controllers) {
    try {
      controller_from_string(c);
    } catch (const config_error&) {
      throw parse_error("config: unknown controller '" + c + "'");
    }
  }
  return cfg;
}

std::string resolve_outdir(const RunConfig& cfg) {
  const char* root = std::getenv("BPG_OUT_ROOT");
  if (root != nullptr && *root != '\0' &&
      !fs::path(cfg.outdir).is_absolute())
    return (fs::path(root) / cfg.outdir).string();
  return cfg.outdir;
}

PolishResult polish_minimum(const Kernel& kernel,
                            const ProblemInstance& problem,
                            const VectorXd& best_x, double best_cost,
                            long budget) {
  PolishResult out;
  out.phi_min = best_cost;
  out.x_star = best_x;

  VectorXd x = best_x;
  double last_accepted;
  try {
    last_accepted = initialize_stepsizes(kernel, problem, x).gamma0;
  } catch (const initialization_error&) {
    last_accepted = problem.global_modulus ? 1.0 / *problem.global_modulus
                                           : 1.0;
  }

  double window_ref = out.phi_min;
  for (long i = 0; i < budget; ++i) {
    const VectorXd grad = problem.f_gradient(x);
    const double f_x = problem.f_value(x);
    LinesearchStep step;
    try {
      step = bpg_linesearch_step(kernel, problem, x, grad, f_x,
                                 last_accepted);
    } catch (const linesearch_stall_error&) {
      out.degraded = true;
      break;
    }
    last_accepted = step.gamma;
    x = std::move(step.x);
    ++out.iterations;
    const double cost = problem.cost(x);
    if (cost < out.phi_min) {
      out.phi_min = cost;
      out.x_star = x;
    }
    if (!interior_with_margin(kernel, x)) break;  // boundary underflow
    if (out.iterations % 500 == 0) {
      // settled at working precision: the last window moved the minimum by
      // less than 1e-12 relative
      if (window_ref - out.phi_min <=
          1e-12 * (1.0 + std::abs(out.phi_min)))
        break;
      window_ref = out.phi_min;
    }
  }
  return out;
}

void normalize_trace(Trajectory& traj, double phi_min) {
  if (traj.records.empty()) return;
  const double denom =
      std::max(traj.records.front().cost - phi_min, 1e-300);
  for (TraceRecord& r : traj.records)
    r.norm_cost = (r.cost - phi_min) / denom;
}

std::string trace_csv(const Trajectory& traj) {
  std::string out = "# fevals=" + std::to_string(traj.fevals) +
                    " (function-only evaluations, excluded from "
                    "oracle_calls)\n";
  out += "iter,oracle_calls,cost,norm_cost,gamma,rho_hat,ell,lambda,a,branch,"
         "time_s\n";
  for (const TraceRecord& r : traj.records) {
    out += std::to_string(r.iter);
    out += ',';
    out += std::to_string(r.oracle_calls);
    out += ',';
    out += format_double(r.cost);
    out += ',';
    out += format_double(r.norm_cost);
    out += ',';
    out += format_double(r.gamma);
    out += ',';
    out += format_double(r.rho_hat);
    out += ',';
    out += format_double(r.ell);
    out += ',';
    out += format_double(r.lambda);
    out += ',';
    out += format_double(r.a);
    out += ',';
    out += r.branch;
    out += ',';
    out += format_double(r.time_s);
    out += '\n';
  }
  return out;
}

namespace {

struct CellRun {
  CellOutcome outcome;
  Trajectory traj;
  std::shared_ptr<const Kernel> kernel;
  ProblemInstance problem;
};

void summarize_cell(CellRun& cell, double phi_min) {
  normalize_trace(cell.traj, phi_min);
  CellOutcome& o = cell.outcome;
  const Trajectory& t = cell.traj;
  o.oracle_calls = t.oracle_calls;
  o.fevals = t.fevals;
  o.best_cost = t.best_cost;
  if (!t.records.empty()) {
    o.final_cost = t.records.back().cost;
    o.final_norm_cost = t.records.back().norm_cost;
  }
  std::vector<double> gammas(t.gammas.begin() + 1, t.gammas.end());
  if (!gammas.empty()) {
    double sum = 0.0;
    for (double g : gammas) sum += g;
    o.mean_gamma = sum / static_cast<double>(gammas.size());
    std::vector<double> sorted = gammas;
    std::sort(sorted.begin(), sorted.end());
    o.median_gamma = sorted[sorted.size() / 2];
    if (cell.problem.global_modulus)
      o.mean_gamma_modulus = o.mean_gamma * *cell.problem.global_modulus;
  }
  return;
}

long first_call_to_target(const Trajectory& traj, double target) {
  for (const TraceRecord& r : traj.records)
    if (r.norm_cost <= target) return r.oracle_calls;
  return -1;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg, int workers) {
  // RunConfig invariant: controller/kernel compatibility is checked before
  // any cell starts.
  for (const std::string& cname : cfg.controllers) {
    const Controller c = controller_from_string(cname);
    if ((c == Controller::AdaPG || c == Controller::AdaPG1Half) &&
        cfg.kernel != "euclidean")
      throw config_error(cname + " requires kernel = euclidean");
    if (c == Controller::BAdaPGAlpha && cfg.kernel == "entropy")
      throw config_error(
          "b-adapg-alpha requires a kernel with positive symmetry "
          "coefficient");
    if (c == Controller::BaGRAAL && cfg.kernel == "entropy")
      throw config_error(
          "bagraal requires a kernel with a strong convexity modulus");
  }

  const std::string outdir = resolve_outdir(cfg);
  fs::create_directories(outdir);

  const long n_cells =
      static_cast<long>(cfg.controllers.size() * cfg.seeds.size());
  std::vector<CellRun> cells(static_cast<std::size_t>(n_cells));

  const auto run_cell = [&](long idx) {
    CellRun& cell = cells[static_cast<std::size_t>(idx)];
    const std::string& cname =
        cfg.controllers[static_cast<std::size_t>(idx) % cfg.controllers.size()];
    const std::uint64_t seed =
        cfg.seeds[static_cast<std::size_t>(idx) / cfg.controllers.size()];
    cell.outcome.controller = cname;
    cell.outcome.seed = seed;
    try {
      cell.problem = build_instance(cfg.family, cfg.m, cfg.n, cfg.lambda,
                                    cfg.noise_scale, seed, cfg.kernel,
                                    cfg.dataset);
      cell.kernel = cell.problem.kernel;
      RunOptions opts;
      opts.controller = controller_from_string(cname);
      opts.budget = cfg.budget;
      opts.epsilon = cfg.epsilon;
      opts.gamma_init = cfg.gamma_init;
      opts.record_iterates = false;
      opts.seed = seed;
      cell.traj = run(*cell.kernel, cell.problem, opts);
    } catch (const std::exception& e) {
      cell.outcome.failed = true;
      cell.outcome.error = e.what();
    }
  };

  if (workers > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (long i = 0; i < n_cells; ++i) run_cell(i);
  } else {
    for (long i = 0; i < n_cells; ++i) run_cell(i);
  }

  ExperimentResult result;

  // Polish the minimum per seed group from the best iterate across cells.
  const long polish_budget =
      cfg.polish_budget > 0 ? cfg.polish_budget : 10 * cfg.budget;
  nlohmann::json jpolish = nlohmann::json::object();
  for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
    const std::uint64_t seed = cfg.seeds[si];
    double best_cost = std::numeric_limits<double>::infinity();
    const CellRun* best_cell = nullptr;
    for (std::size_t ci = 0; ci < cfg.controllers.size(); ++ci) {
      const CellRun& cell = cells[si * cfg.controllers.size() + ci];
      if (!cell.outcome.failed && cell.traj.best_cost < best_cost) {
        best_cost = cell.traj.best_cost;
        best_cell = &cell;
      }
    }
    if (best_cell == nullptr) continue;
    PolishResult pol;
    try {
      pol = polish_minimum(*best_cell->kernel, best_cell->problem,
                           best_cell->traj.best_x, best_cost, polish_budget);
    } catch (const std::exception&) {
      pol.phi_min = best_cost;  // keep the raw minimum, flag the precision
      pol.x_star = best_cell->traj.best_x;
      pol.degraded = true;
    }
    result.phi_min[seed] = pol.phi_min;
    nlohmann::json jp;
    jp["phi_min"] = pol.phi_min;
    jp["degraded"] = pol.degraded;
    jp["iterations"] = pol.iterations;
    jp["best_x"] = std::vector<double>(
        pol.x_star.data(), pol.x_star.data() + pol.x_star.size());
    jpolish[std::to_string(seed)] = std::move(jp);
  }

  // Per-cell CSVs and summaries.
  nlohmann::json jcells = nlohmann::json::array();
  for (std::size_t idx = 0; idx < cells.size(); ++idx) {
    CellRun& cell = cells[idx];
    CellOutcome& o = cell.outcome;
    if (!o.failed) {
      const auto it = result.phi_min.find(o.seed);
      const double phi_min =
          it != result.phi_min.end() ? it->second : cell.traj.best_cost;
      summarize_cell(cell, phi_min);
      if (cfg.target)
        o.calls_to_target = first_call_to_target(cell.traj, *cfg.target);
      o.hit_target = o.calls_to_target >= 0;

      const std::string fname = cfg.family + "_" + cfg.kernel + "_" +
                                o.controller + "_s" + std::to_string(o.seed) +
                                ".csv";
      o.csv_path = (fs::path(outdir) / fname).string();
      std::ofstream csv(o.csv_path, std::ios::binary);
      csv << trace_csv(cell.traj);
    } else {
      ++result.failures;
    }

    nlohmann::json jc;
    jc["controller"] = o.controller;
    jc["seed"] = o.seed;
    jc["failed"] = o.failed;
    if (o.failed) jc["error"] = o.error;
    else {
      jc["csv"] = o.csv_path;
      jc["final_cost"] = o.final_cost;
      jc["final_norm_cost"] = o.final_norm_cost;
      jc["best_cost"] = o.best_cost;
      jc["oracle_calls"] = o.oracle_calls;
      jc["fevals"] = o.fevals;
      jc["mean_gamma"] = o.mean_gamma;
      jc["median_gamma"] = o.median_gamma;
      if (o.mean_gamma_modulus)
        jc["mean_gamma_modulus"] = *o.mean_gamma_modulus;
      if (cfg.target) jc["calls_to_target"] = o.calls_to_target;
      jc["hit_target"] = o.hit_target;
      // stepsize window matching the plotting convention
      const std::size_t wlen =
          std::min<std::size_t>(200, cell.traj.gammas.size() - 1);
      std::vector<double> window(cell.traj.gammas.begin() + 1,
                                 cell.traj.gammas.begin() + 1 + wlen);
      jc["gamma_window"] = window;
    }
    jcells.push_back(std::move(jc));
    result.cells.push_back(o);
  }

  nlohmann::json summary;
  summary["family"] = cfg.family;
  summary["kernel"] = cfg.kernel;
  summary["m"] = cfg.m;
  summary["n"] = cfg.n;
  summary["lambda"] = cfg.lambda;
  summary["noise_scale"] = cfg.noise_scale;
  if (!cfg.dataset.empty()) summary["dataset"] = cfg.dataset;
  summary["seeds"] = cfg.seeds;
  summary["budget"] = cfg.budget;
  if (cfg.target) summary["target"] = *cfg.target;
  summary["epsilon"] = cfg.epsilon;
  summary["polish"] = jpolish;
  summary["cells"] = jcells;

  result.summary_path = (fs::path(outdir) / "summary.json").string();
  std::ofstream js(result.summary_path, std::ios::binary);
  js << summary.dump(2) << '\n';
  return result;
}

}  // namespace bregman
