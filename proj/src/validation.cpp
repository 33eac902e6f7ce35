#include "bregman/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "bregman/parallel.hpp"
#include "bregman/rng.hpp"

namespace bregman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

VectorXd draw_interior(const Kernel& kernel, int dim, Rng& rng, double lo,
                       double hi) {
  const bool orthant = kernel.domain() == KernelDomain::NonnegativeOrthant;
  VectorXd x(dim);
  for (int i = 0; i < dim; ++i) {
    const double mag = rng.log_uniform(lo, hi);
    x[i] = orthant ? mag : (rng.uniform01() < 0.5 ? -mag : mag);
  }
  return x;
}

VectorXd draw_domain(const Kernel& kernel, int dim, Rng& rng, double lo,
                     double hi) {
  VectorXd x = draw_interior(kernel, dim, rng, lo, hi);
  if (kernel.domain() == KernelDomain::NonnegativeOrthant)
    for (int i = 0; i < dim; ++i)
      if (rng.uniform01() < 0.1) x[i] = 0.0;  // exercise the boundary
  return x;
}

VectorXd draw_dual(int dim, Rng& rng, double lo, double hi) {
  VectorXd v(dim);
  for (int i = 0; i < dim; ++i) {
    const double mag = rng.log_uniform(lo, hi);
    v[i] = rng.uniform01() < 0.5 ? -mag : mag;
  }
  return v;
}

// Violation of one sample: NaN marks "skipped".
using SampleFn = std::function<double(long, Rng&)>;

InvariantReport sample_suite(const std::string& name, long n_samples,
                             std::uint64_t seed, double threshold,
                             const SampleFn& fn) {
  InvariantReport rep;
  rep.name = name;
  rep.samples = n_samples;
  rep.threshold = threshold;

  double worst = -kInf;
  long worst_idx = -1;
  long skipped = 0;
#pragma omp parallel
  {
    double local_worst = -kInf;
    long local_idx = -1;
    long local_skipped = 0;
#pragma omp for schedule(static)
    for (long i = 0; i < n_samples; ++i) {
      Rng rng(substream(seed, static_cast<std::uint64_t>(i)));
      const double v = fn(i, rng);
      if (std::isnan(v)) {
        ++local_skipped;
        continue;
      }
      if (v > local_worst || (v == local_worst && i < local_idx)) {
        local_worst = v;
        local_idx = i;
      }
    }
#pragma omp critical
    {
      skipped += local_skipped;
      if (local_worst > worst ||
          (local_worst == worst && local_idx < worst_idx)) {
        worst = local_worst;
        worst_idx = local_idx;
      }
    }
  }
  rep.skipped = skipped;
  rep.worst_violation = worst == -kInf ? 0.0 : worst;
  rep.pass = rep.worst_violation <= threshold;
  if (!rep.pass && worst_idx >= 0) {
    std::ostringstream os;
    os << "sample " << worst_idx << " violated by " << worst;
    rep.context = os.str();
  }
  return rep;
}

double scale_of(std::initializer_list<double> terms) {
  double s = 1.0;
  for (double t : terms) s += std::abs(t);
  return s;
}

}  // namespace

std::string InvariantReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["samples"] = samples;
  j["skipped"] = skipped;
  j["worst_violation"] = worst_violation;
  j["threshold"] = threshold;
  j["pass"] = pass;
  j["applicable"] = applicable;
  if (!context.empty()) j["context"] = context;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Kernel-level suites

InvariantReport check_bregman_young(const Kernel& kernel, int dim,
                                    long n_samples, std::uint64_t seed) {
  return sample_suite(
      "bregman_young", n_samples, seed, 1e-10, [&](long i, Rng& rng) {
        const VectorXd x = draw_domain(kernel, dim, rng, 1e-3, 1e2);
        const VectorXd y = draw_interior(kernel, dim, rng, 1e-3, 1e2);
        if (!kernel.is_interior(y)) return std::nan("");
        const VectorXd v = draw_dual(dim, rng, 1e-3, 1e1);
        const double delta =
            (i % 16 == 0) ? 1e-8 : rng.log_uniform(1e-3, 1e1);
        const double bound = bregman_young_bound(kernel, x, y, v, delta);
        if (bound == kInf) return -kInf;  // inequality trivially holds
        const double inner = (x - y).dot(v);
        return (inner - bound) / (1.0 + std::abs(bound));
      });
}

InvariantReport check_duality_roundtrip(const Kernel& kernel, int dim,
                                        long n_samples, std::uint64_t seed) {
  return sample_suite(
      "duality_roundtrip", n_samples, seed, 1e-10, [&](long, Rng& rng) {
        const VectorXd x = draw_interior(kernel, dim, rng, 1e-3, 1e2);
        const VectorXd y = draw_interior(kernel, dim, rng, 1e-3, 1e2);

        // Fact D(iv): D(x, y) = D*(grad(y), grad(x))
        const double d = bregman_distance(kernel, x, y);
        const double ds = conjugate_bregman_distance(
            kernel, kernel.gradient(y), kernel.gradient(x));
        double worst = std::abs(d - ds) /
                       scale_of({d, ds, kernel.value(x), kernel.value(y)});

        // mirror round-trip, componentwise
        const VectorXd r = kernel.mirror_inverse(kernel.gradient(x));
        for (int i = 0; i < dim; ++i)
          worst = std::max(worst, std::abs(r[i] - x[i]) /
                                      std::max(std::abs(x[i]), 1e-12));

        // gradient(mirror_inverse(eta)) = eta
        const VectorXd eta = draw_dual(dim, rng, 1e-3, 1e1);
        const VectorXd xe = kernel.mirror_inverse(eta);
        const VectorXd back = kernel.gradient(xe);
        for (int i = 0; i < dim; ++i)
          worst = std::max(worst, std::abs(back[i] - eta[i]) /
                                      std::max(std::abs(eta[i]), 1e-12));

        // Fenchel identity at eta
        const double conj = kernel.conjugate_value(eta);
        const double fen = eta.dot(xe) - kernel.value(xe);
        worst = std::max(worst, std::abs(conj - fen) /
                                    scale_of({conj, fen, kernel.value(xe)}));
        return worst;
      });
}

InvariantReport check_three_point(const Kernel& kernel, int dim,
                                  long n_samples, std::uint64_t seed) {
  return sample_suite(
      "three_point_identity", n_samples, seed, 1e-9, [&](long, Rng& rng) {
        const VectorXd x = draw_domain(kernel, dim, rng, 1e-3, 1e2);
        const VectorXd y = draw_interior(kernel, dim, rng, 1e-3, 1e2);
        const VectorXd z = draw_interior(kernel, dim, rng, 1e-3, 1e2);
        const double dxz = bregman_distance(kernel, x, z);
        const double dxy = bregman_distance(kernel, x, y);
        const double dyz = bregman_distance(kernel, y, z);
        const double ip =
            (x - y).dot(kernel.gradient(y) - kernel.gradient(z));
        return std::abs(dxz - dxy - dyz - ip) /
               scale_of({dxz, dxy, dyz, ip});
      });
}

InvariantReport check_cauchy_schwarz(const Kernel& kernel, int dim,
                                     long n_samples, std::uint64_t seed) {
  const bool open_domain = kernel.domain() == KernelDomain::FullSpace;
  const auto alpha = kernel.symmetry_coefficient();
  return sample_suite(
      "cauchy_schwarz_delta", n_samples, seed, 1e-10, [&](long, Rng& rng) {
        const VectorXd x = draw_interior(kernel, dim, rng, 1e-2, 1e1);
        const VectorXd y = draw_interior(kernel, dim, rng, 1e-2, 1e1);
        const VectorXd v = draw_dual(dim, rng, 1e-2, 1e1);
        const double d = bregman_distance(kernel, x, y);
        if (d <= 0.0) return std::nan("");

        const auto ds = bregman_cauchy_schwarz_delta(kernel, x, y, v);
        if (!ds) {
          // only legitimate for a non-open domain
          return open_domain ? 1.0 : std::nan("");
        }
        const VectorXd gy = kernel.gradient(y);
        const auto residual = [&](double delta) {
          return kernel.conjugate_bregman(gy, gy + delta * v) - d;
        };
        // root residual, sign change across the root, and the alpha
        // relaxation all feed one violation figure
        double worst = std::abs(residual(*ds)) / (1e-300 + d);
        worst = std::max(worst, residual(*ds * (1.0 - 1e-3)) / (1.0 + d));
        worst = std::max(worst, -residual(*ds * (1.0 + 1e-3)) / (1.0 + d));

        if (alpha && *alpha > 0.0) {
          const double inner = (x - y).dot(v);
          if (inner > 0.0) {
            const double relaxed = (1.0 + *alpha) / *alpha * d / *ds;
            worst = std::max(worst, (inner - relaxed) / (1.0 + inner));
          }
        }
        return worst;
      });
}

// ---------------------------------------------------------------------------
// Trajectory-level suites

namespace {

struct IterateCache {
  std::vector<VectorXd> grads;
  std::vector<VectorXd> mirrors;
  std::vector<double> fs;
  std::vector<double> phis;

  IterateCache(const Kernel& kernel, const ProblemInstance& problem,
               const Trajectory& traj) {
    const std::size_t len = traj.iterates.size();
    grads.reserve(len);
    mirrors.reserve(len);
    fs.reserve(len);
    phis.reserve(len);
    for (const VectorXd& x : traj.iterates) {
      grads.push_back(problem.f_gradient(x));
      mirrors.push_back(kernel.gradient(x));
      const double f = problem.f_value(x);
      fs.push_back(f);
      phis.push_back(f + problem.g_value(x));
    }
  }
};

VectorXd draw_probe(const Kernel& kernel, const ProblemInstance& problem,
                    int dim, Rng& rng) {
  VectorXd x = draw_interior(kernel, dim, rng, 1e-3, 1e2);
  if (problem.g_kind == NonsmoothKind::SimplexIndicator) x /= par::sum(x);
  return x;
}

}  // namespace

InvariantReport check_main_identity(const Kernel& kernel,
                                    const ProblemInstance& problem,
                                    const Trajectory& traj, int n_probes,
                                    std::uint64_t seed) {
  InvariantReport rep;
  rep.name = "main_identity";
  rep.threshold = 1e-8;
  if (traj.iterates.size() < 3) {
    rep.applicable = false;
    rep.pass = true;
    rep.context = "trajectory too short";
    return rep;
  }
  const IterateCache cache(kernel, problem, traj);
  const long klast = static_cast<long>(traj.iterates.size()) - 2;
  const int dim = static_cast<int>(traj.iterates[0].size());

  double worst = 0.0;
  long count = 0, skipped = 0;
  for (int p = 0; p < n_probes; ++p) {
    Rng rng(substream(seed, static_cast<std::uint64_t>(p)));
    const VectorXd x = draw_probe(kernel, problem, dim, rng);
    const double theta_draw = rng.log_uniform(1e-2, 1e2);
    const double theta = (p % 2 == 0) ? 0.0 : theta_draw;
    const double fx = problem.f_value(x);
    const double gx = problem.g_value(x);
    if (!std::isfinite(fx) || !std::isfinite(gx)) {
      ++skipped;
      continue;
    }
    const double phix = fx + gx;

    for (long k = 1; k <= klast; ++k) {
      const VectorXd& xk = traj.iterates[k];
      const VectorXd& xkm = traj.iterates[k - 1];
      const VectorXd& xkp = traj.iterates[k + 1];
      const double gk = traj.gammas[k];
      const double gkp = traj.gammas[k + 1];
      const double rho = gkp / gk;

      const VectorXd dmir = cache.mirrors[k] - cache.mirrors[k - 1];
      const double dsym_prev = dmir.dot(xk - xkm);
      if (dsym_prev < kDegeneratePairEps) continue;
      const double ell =
          (cache.grads[k] - cache.grads[k - 1]).dot(xk - xkm) / dsym_prev;

      const VectorXd hdiff =
          dmir - gk * (cache.grads[k] - cache.grads[k - 1]);
      const double bterm = rho * (xkp - xk).dot(hdiff);

      const VectorXd sub_g_next =
          (cache.mirrors[k] - cache.mirrors[k + 1]) / gkp - cache.grads[k];
      const VectorXd sub_g_curr =
          (cache.mirrors[k - 1] - cache.mirrors[k]) / gk - cache.grads[k - 1];
      const VectorXd sub_phi_curr = sub_g_curr + cache.grads[k];

      const double gxk = cache.phis[k] - cache.fs[k];
      const double gxkp = cache.phis[k + 1] - cache.fs[k + 1];

      const double d_f = fx - cache.fs[k] - cache.grads[k].dot(x - xk);
      const double d_g_step = gxkp - gxk - sub_g_curr.dot(xkp - xk);
      const double d_g_probe = gx - gxkp - sub_g_next.dot(x - xkp);
      const double d_phi =
          cache.phis[k - 1] - cache.phis[k] - sub_phi_curr.dot(xkm - xk);

      const double lhs_1 = bregman_distance(kernel, x, xkp);
      const double lhs_2 = gkp * (1.0 + theta) * (cache.phis[k] - phix);
      const double lhs_3 = kernel.bregman(xkp, xk);
      const double rhs_1 = bregman_distance(kernel, x, xk);
      const double rhs_2 = gkp * theta * (cache.phis[k - 1] - phix);
      const double rhs_3 = -rho * theta * (1.0 - gk * ell) * dsym_prev;
      const double rhs_5 =
          -gkp * (d_f + d_g_step + d_g_probe + theta * d_phi);

      const double lhs = lhs_1 + lhs_2 + lhs_3;
      const double rhs = rhs_1 + rhs_2 + rhs_3 + bterm + rhs_5;
      const double viol =
          std::abs(lhs - rhs) /
          scale_of({lhs_1, lhs_2, lhs_3, rhs_1, rhs_2, rhs_3, bterm, rhs_5});
      ++count;
      if (viol > worst) worst = viol;
    }
  }
  rep.samples = count;
  rep.skipped = skipped;
  rep.worst_violation = worst;
  rep.pass = worst <= rep.threshold;
  return rep;
}

double merit_value(const Kernel& kernel, const ProblemInstance& problem,
                   const Trajectory& traj, long k, const VectorXd& x,
                   MeritKind kind) {
  const VectorXd& xk = traj.iterates[static_cast<std::size_t>(k)];
  const VectorXd& xkm = traj.iterates[static_cast<std::size_t>(k - 1)];
  const double gk = traj.gammas[static_cast<std::size_t>(k)];
  const double rho_hat = traj.rho_hats[static_cast<std::size_t>(k)];
  const double rho =
      gk / traj.gammas[static_cast<std::size_t>(k - 1)];
  const double p_prev = problem.cost(xkm) - problem.cost(x);
  const double d_ref = bregman_distance(kernel, x, xk);
  if (kind == MeritKind::BregmanYoung) {
    return d_ref + gk * (1.0 + rho_hat) * p_prev +
           (1.0 - rho / (2.0 * rho_hat)) * kernel.bregman(xk, xkm);
  }
  const double alpha = kernel.symmetry_coefficient().value();
  return d_ref + kernel.bregman(xk, xkm) +
         gk * (1.0 + 2.0 / (1.0 + alpha) * rho_hat) * p_prev;
}

InvariantReport check_merit_descent(const Kernel& kernel,
                                    const ProblemInstance& problem,
                                    const Trajectory& traj,
                                    const VectorXd& x_star, MeritKind kind) {
  InvariantReport rep;
  rep.name = kind == MeritKind::BregmanYoung ? "merit_descent_by"
                                             : "merit_descent_fne";
  rep.threshold = 1e-8;
  if (!kernel.is_interior(x_star)) {
    rep.applicable = false;
    rep.pass = true;
    rep.context = "reference point on the domain boundary";
    return rep;
  }
  const long len = static_cast<long>(traj.iterates.size());
  if (len < 3) {
    rep.applicable = false;
    rep.pass = true;
    rep.context = "trajectory too short";
    return rep;
  }
  double worst = 0.0;
  long worst_k = -1;
  double u_prev = merit_value(kernel, problem, traj, 1, x_star, kind);
  for (long k = 2; k < len; ++k) {
    const double u = merit_value(kernel, problem, traj, k, x_star, kind);
    const double viol = (u - u_prev) / (1.0 + std::abs(u_prev));
    if (viol > worst) {
      worst = viol;
      worst_k = k;
    }
    u_prev = u;
    ++rep.samples;
  }
  rep.worst_violation = worst;
  rep.pass = worst <= rep.threshold;
  if (!rep.pass) {
    std::ostringstream os;
    os << "merit increased at iterate " << worst_k;
    rep.context = os.str();
  }
  return rep;
}

std::vector<double> lambda_limit_values(const Kernel& kernel,
                                        const ProblemInstance& problem,
                                        const VectorXd& x0,
                                        std::span<const double> gamma_grid) {
  const VectorXd grad0 = problem.f_gradient(x0);
  const VectorXd mirror0 = kernel.gradient(x0);
  const double delta = 2.0 * std::sqrt(2.0);  // growth rule with rho = 1
  std::vector<double> out;
  out.reserve(gamma_grid.size());
  for (double gamma : gamma_grid) {
    const VectorXd x1 = problem.prox(x0, grad0, gamma);
    IterPairSnapshot snap{x0,      x1,
                          grad0,   problem.f_gradient(x1),
                          mirror0, kernel.gradient(x1),
                          gamma};
    try {
      out.push_back(std::abs(curvature_estimate(kernel, snap, delta) - 1.0));
    } catch (const degenerate_pair_error&) {
      out.push_back(0.0);  // stationary point: the limit holds trivially
    }
  }
  return out;
}

InvariantReport check_lambda_limit(const Kernel& kernel,
                                   const ProblemInstance& problem,
                                   const VectorXd& x0,
                                   std::span<const double> gamma_grid) {
  InvariantReport rep;
  rep.name = "lambda_limit";
  rep.threshold = 1e-3;
  const std::vector<double> vals =
      lambda_limit_values(kernel, problem, x0, gamma_grid);
  rep.samples = static_cast<long>(vals.size());
  rep.worst_violation = vals.back();
  rep.pass = vals.back() <= rep.threshold && vals.back() <= vals.front();
  std::ostringstream os;
  for (std::size_t i = 0; i < vals.size(); ++i)
    os << (i ? "," : "") << vals[i];
  rep.context = os.str();
  return rep;
}

InvariantReport check_fne_bound(const Kernel& kernel,
                                const ProblemInstance& problem,
                                const Trajectory& traj) {
  InvariantReport rep;
  rep.name = "fne_lower_bound";
  rep.threshold = 1e-9;
  const long len = static_cast<long>(traj.iterates.size());
  if (len < 3) {
    rep.applicable = false;
    rep.pass = true;
    return rep;
  }
  const IterateCache cache(kernel, problem, traj);
  double worst = -kInf;
  for (long k = 1; k + 1 < len; ++k) {
    const VectorXd& xk = traj.iterates[k];
    const VectorXd hdiff =
        (cache.mirrors[k] - cache.mirrors[k - 1]) -
        traj.gammas[k] * (cache.grads[k] - cache.grads[k - 1]);
    const double rho = traj.gammas[k + 1] / traj.gammas[k];
    const double b = rho * (traj.iterates[k + 1] - xk).dot(hdiff);
    const double dsym =
        (cache.mirrors[k + 1] - cache.mirrors[k]).dot(traj.iterates[k + 1] - xk);
    worst = std::max(worst, dsym - b);
    ++rep.samples;
  }
  rep.worst_violation = worst == -kInf ? 0.0 : worst;
  rep.pass = rep.worst_violation <= rep.threshold;
  return rep;
}

InvariantReport check_ratio_caps(const Trajectory& traj) {
  InvariantReport rep;
  rep.name = "ratio_caps";
  rep.threshold = 0.0;
  const double golden = 0.5 * (1.0 + std::sqrt(5.0));
  double worst = -kInf;
  for (std::size_t k = 1; k < traj.gammas.size(); ++k) {
    const double rho_hat = traj.rho_hats[k];
    if (std::isnan(rho_hat)) {
      ++rep.skipped;
      continue;
    }
    const double rho = traj.gammas[k] / traj.gammas[k - 1];
    worst = std::max(worst, rho_hat - golden - 1e-12);
    worst = std::max(worst, rho - rho_hat * (1.0 + 1e-12));
    ++rep.samples;
  }
  rep.worst_violation = worst == -kInf ? 0.0 : worst;
  rep.pass = rep.worst_violation <= 0.0;
  return rep;
}

InvariantReport check_rate_shape(const Kernel& kernel,
                                 const ProblemInstance& problem,
                                 const Trajectory& traj, const VectorXd& x,
                                 MeritKind kind) {
  InvariantReport rep;
  rep.name = "rate_shape";
  rep.threshold = 1e-9;
  const long len = static_cast<long>(traj.iterates.size());
  if (len < 3) {
    rep.applicable = false;
    rep.pass = true;
    return rep;
  }
  const double q =
      kind == MeritKind::BregmanYoung
          ? 1.0
          : 2.0 / (1.0 + kernel.symmetry_coefficient().value());
  const double u1 = merit_value(kernel, problem, traj, 1, x, kind);
  const double phix = problem.cost(x);

  double worst = -kInf;
  double pmin = problem.cost(traj.iterates[0]) - phix;
  double gamma_sum = traj.gammas[1];
  for (long cap = 1; cap + 1 < len; ++cap) {
    pmin = std::min(pmin, problem.cost(traj.iterates[cap]) - phix);
    gamma_sum += traj.gammas[cap + 1];
    const double denom = q * traj.gammas[1] * traj.rho_hats[1] + gamma_sum;
    const double bound = u1 / denom;
    worst = std::max(worst, (pmin - bound) / (1.0 + std::abs(bound)));
    ++rep.samples;
  }
  rep.worst_violation = worst == -kInf ? 0.0 : worst;
  rep.pass = rep.worst_violation <= rep.threshold;
  return rep;
}

std::vector<InvariantReport> run_kernel_suites(const Kernel& kernel, int dim,
                                               long n_samples,
                                               std::uint64_t seed) {
  std::vector<InvariantReport> out;
  out.push_back(check_bregman_young(kernel, dim, n_samples, seed));
  out.push_back(check_duality_roundtrip(kernel, dim, n_samples, seed + 1));
  out.push_back(check_three_point(kernel, dim, n_samples, seed + 2));
  out.push_back(check_cauchy_schwarz(
      kernel, dim, std::min<long>(n_samples, 2000), seed + 3));
  return out;
}

}  // namespace bregman
