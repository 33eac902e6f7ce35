#include "bregman/problems.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "bregman/parallel.hpp"
#include "bregman/rng.hpp"
#include "bregman/scalar_root.hpp"

namespace bregman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double spectral_norm(const MatrixXd& a) {
  const MatrixXd gram = (a.rows() <= a.cols())
                            ? MatrixXd(a * a.transpose())
                            : MatrixXd(a.transpose() * a);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

VectorXd soft_threshold(const VectorXd& u, double t) {
  VectorXd w(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double m = std::abs(u[i]) - t;
    w[i] = m > 0.0 ? (u[i] > 0.0 ? m : -m) : 0.0;
  }
  return w;
}

// signal + noise_scale * mean|signal| * U[-1,1]
VectorXd noisy_output(const VectorXd& signal, double noise_scale, Rng& rng) {
  const double level = noise_scale * signal.cwiseAbs().mean();
  VectorXd b(signal.size());
  for (Eigen::Index i = 0; i < signal.size(); ++i)
    b[i] = signal[i] + level * rng.uniform(-1.0, 1.0);
  return b;
}

double simplex_indicator(const VectorXd& x) {
  if (x.minCoeff() < -1e-12) return kInf;
  return std::abs(par::sum(x) - 1.0) <= 1e-9 ? 0.0 : kInf;
}

}  // namespace

double quartic_l1_scale_root(double c) {
  if (c <= 0.0) return 0.0;
  if (!std::isfinite(c))
    throw numerical_error("quartic l1 prox: |u|^2 is not finite");
  const double hi = std::cbrt(c);  // s (s+1)^2 >= s^3, so the root is below
  return detail::safeguarded_newton(
      [c](double s) { return s * (s + 1.0) * (s + 1.0) - c; },
      [](double s) { return (s + 1.0) * (3.0 * s + 1.0); }, 0.0, hi, hi,
      1e-14 * std::max(1.0, c));
}

std::function<VectorXd(const VectorXd&, const VectorXd&, double)> make_prox(
    std::shared_ptr<const Kernel> kernel, NonsmoothKind g_kind,
    double lambda) {
  const std::string id(kernel->name());
  if (g_kind == NonsmoothKind::Zero) {
    // Mirror step covers every kernel when g vanishes.
    return [k = std::move(kernel)](const VectorXd& x, const VectorXd& v,
                                   double gamma) {
      return k->mirror_inverse(k->gradient(x) - gamma * v);
    };
  }
  if (g_kind == NonsmoothKind::L1) {
    if (id == "euclidean") {
      return [lambda](const VectorXd& x, const VectorXd& v, double gamma) {
        return soft_threshold(x - gamma * v, gamma * lambda);
      };
    }
    if (id == "quartic") {
      return [k = std::move(kernel), lambda](
                 const VectorXd& x, const VectorXd& v, double gamma) {
        const VectorXd u =
            soft_threshold(k->gradient(x) - gamma * v, gamma * lambda);
        const double s = quartic_l1_scale_root(u.squaredNorm());
        return VectorXd(u / (s + 1.0));
      };
    }
    if (id == "entropy") {
      return [lambda](const VectorXd& x, const VectorXd& v, double gamma) {
        VectorXd w(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i)
          w[i] = x[i] * std::exp(-gamma * (v[i] + lambda));
        return w;
      };
    }
    throw config_error("no l1 prox for kernel: " + id);
  }
  if (id == "entropy") {
    return [](const VectorXd& x, const VectorXd& v, double gamma) {
      // softmax of (ln x - gamma v), shifted for stability
      VectorXd s(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i)
        s[i] = std::log(x[i]) - gamma * v[i];
      const double shift = s.maxCoeff();
      VectorXd w = (s.array() - shift).exp();
      w /= par::sum(w);
      return VectorXd(w);
    };
  }
  throw config_error("no simplex prox for kernel: " + id);
}

std::shared_ptr<const Kernel> make_run_kernel(const std::string& kernel_id,
                                              int n, std::uint64_t seed) {
  if (kernel_id == "quadratic") {
    Rng rng(substream(seed, 0x9d));
    const MatrixXd r = rng.normal_matrix(n, n);
    const MatrixXd q =
        r.transpose() * r / n + 0.5 * MatrixXd::Identity(n, n);
    return std::make_shared<QuadraticKernel>(q);
  }
  return std::shared_ptr<const Kernel>(make_kernel(kernel_id));
}

// ---------------------------------------------------------------------------
// Polynomially growing Hessian

namespace {
struct PolyData {
  MatrixXd a, at, c, ct;
  VectorXd b, d;
};
}  // namespace

ProblemInstance poly_hessian_instance(int m, int n, std::uint64_t seed,
                                      const std::string& kernel_id,
                                      double noise_scale) {
  if (m < 1 || n < 1) throw config_error("poly_hessian: m, n >= 1 required");
  if (kernel_id == "entropy")
    throw config_error("poly_hessian: full-space kernel required");
  Rng rng(seed);
  auto data = std::make_shared<PolyData>();
  data->a = rng.uniform_matrix(m, n, 0.0, 1.0);
  data->c = rng.uniform_matrix(m, n, 0.0, 1.0);
  const VectorXd x_ref = rng.uniform_vector(n, 0.0, 1.0);
  data->b = noisy_output(data->a * x_ref, noise_scale, rng);
  data->d = noisy_output(data->c * x_ref, noise_scale, rng);
  data->at = data->a.transpose();
  data->ct = data->c.transpose();

  ProblemInstance p;
  p.name = "poly_hessian";
  p.m = m;
  p.n = n;
  p.seed = seed;
  p.kernel_id = kernel_id;
  p.kernel = make_run_kernel(kernel_id, n, seed);
  p.g_kind = NonsmoothKind::Zero;

  p.f_value = [data](const VectorXd& x) {
    const VectorXd r = par::matvec_t(data->at, x) - data->b;
    const VectorXd s = par::matvec_t(data->ct, x) - data->d;
    double quart = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double r2 = r[i] * r[i];
      quart += r2 * r2;
    }
    return 0.25 * quart + 0.5 * s.squaredNorm();
  };
  p.f_gradient = [data](const VectorXd& x) {
    VectorXd r = par::matvec_t(data->at, x) - data->b;
    const VectorXd s = par::matvec_t(data->ct, x) - data->d;
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = r[i] * r[i] * r[i];
    return VectorXd(par::matvec_t(data->a, r) + par::matvec_t(data->c, s));
  };
  p.g_value = [](const VectorXd&) { return 0.0; };
  p.prox = make_prox(p.kernel, NonsmoothKind::Zero, 0.0);

  const double na = spectral_norm(data->a);
  const double nb = data->b.norm();
  const double nc = spectral_norm(data->c);
  p.global_modulus = 3.0 * std::pow(na, 4) + 6.0 * std::pow(na, 3) * nb +
                     3.0 * na * na * nb * nb + nc * nc;
  p.feasible_start = rng.uniform_vector(n, 0.0, 1.0);
  return p;
}

// ---------------------------------------------------------------------------
// KL-divergence nonnegative regression

namespace {
struct KlData {
  MatrixXd a, at;
  VectorXd b;
};

ProblemInstance kl_common(std::shared_ptr<KlData> data, double lambda,
                          std::uint64_t seed) {
  ProblemInstance p;
  p.name = "kl_regression";
  p.m = static_cast<int>(data->a.rows());
  p.n = static_cast<int>(data->a.cols());
  p.seed = seed;
  p.kernel_id = "entropy";
  p.kernel = make_run_kernel("entropy", p.n, seed);
  p.g_kind = NonsmoothKind::L1;
  p.g_lambda = lambda;

  p.f_value = [data](const VectorXd& x) {
    if (x.minCoeff() < 0.0) return kInf;
    const VectorXd z = par::matvec_t(data->at, x);
    double s = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      const double zj = z[j], bj = data->b[j];
      s += (zj > 0.0 ? zj * std::log(zj / bj) - zj : 0.0) + bj;
    }
    return s;
  };
  p.f_gradient = [data](const VectorXd& x) {
    VectorXd z = par::matvec_t(data->at, x);
    for (Eigen::Index j = 0; j < z.size(); ++j)
      z[j] = std::log(z[j] / data->b[j]);
    return VectorXd(par::matvec_t(data->a, z));
  };
  p.g_value = [lambda](const VectorXd& x) { return lambda * x.lpNorm<1>(); };
  p.prox = make_prox(p.kernel, NonsmoothKind::L1, lambda);

  p.global_modulus = data->a.cwiseAbs().colwise().sum().maxCoeff();
  p.feasible_start = VectorXd::Ones(p.n);
  return p;
}
}  // namespace

ProblemInstance kl_regression_instance(int m, int n, double lambda,
                                       std::uint64_t seed,
                                       double noise_scale) {
  if (m < 1 || n < 1) throw config_error("kl_regression: m, n >= 1 required");
  if (lambda < 0.0) throw config_error("kl_regression: lambda >= 0 required");
  Rng rng(seed);
  auto data = std::make_shared<KlData>();
  data->a = rng.uniform_matrix(m, n, 0.0, 1.0);
  data->a /= data->a.sum();
  const VectorXd x_ref = rng.uniform_vector(n, 0.0, 1.0);
  data->b = noisy_output(data->a * x_ref, noise_scale, rng)
                .cwiseMax(1e-3);  // keep b strictly positive
  data->at = data->a.transpose();
  return kl_common(std::move(data), lambda, seed);
}

ProblemInstance kl_regression_from_data(MatrixXd a, VectorXd b,
                                        double lambda) {
  if (a.rows() != b.size())
    throw config_error("kl_regression: A rows must match b");
  if (a.size() > 0 && (a.minCoeff() < 0.0 || b.minCoeff() <= 0.0))
    throw config_error(
        "kl_regression: A must be nonnegative and b strictly positive");
  auto data = std::make_shared<KlData>();
  data->a = std::move(a);
  data->at = data->a.transpose();
  data->b = std::move(b);
  return kl_common(std::move(data), lambda, 0);
}

// ---------------------------------------------------------------------------
// Log-det barrier on the simplex

ProblemInstance logdet_simplex_from_matrix(MatrixXd h) {
  const int m = static_cast<int>(h.rows());
  const int n = static_cast<int>(h.cols());
  if (n < m + 1) throw config_error("logdet_simplex: n >= m + 1 required");
  if (Eigen::ColPivHouseholderQR<MatrixXd>(h).rank() < m)
    throw config_error("logdet_simplex: H must have full row rank");
  auto data = std::make_shared<MatrixXd>(std::move(h));

  ProblemInstance p;
  p.name = "logdet_simplex";
  p.m = m;
  p.n = n;
  p.kernel_id = "entropy";
  p.kernel = make_run_kernel("entropy", n, 0);
  p.g_kind = NonsmoothKind::SimplexIndicator;

  const auto factor = [data](const VectorXd& x) {
    const Eigen::Index mm = data->rows();
    MatrixXd mat = MatrixXd::Zero(mm, mm);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      mat.noalias() += data->col(i) * data->col(i).transpose() / x[i];
    Eigen::LLT<MatrixXd> llt(mat);
    if (llt.info() != Eigen::Success)
      throw domain_error("logdet_simplex: M(x) not positive definite");
    return llt;
  };

  p.f_value = [factor](const VectorXd& x) {
    if (x.minCoeff() <= 0.0) return kInf;
    const auto llt = factor(x);
    double s = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
  };
  p.f_gradient = [data, factor](const VectorXd& x) {
    const auto llt = factor(x);
    // w_i = h_i^T M^{-1} h_i from one triangular solve: ||L^{-1} h_i||^2
    const MatrixXd w = llt.matrixL().solve(*data);
    VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      g[i] = -w.col(i).squaredNorm() / (x[i] * x[i]);
    return g;
  };
  p.g_value = simplex_indicator;
  p.prox = make_prox(p.kernel, NonsmoothKind::SimplexIndicator, 0.0);
  p.feasible_start = VectorXd::Constant(n, 1.0 / n);
  return p;
}

ProblemInstance logdet_simplex_instance(int m, int n, std::uint64_t seed,
                                        const std::string& dataset_path) {
  MatrixXd h;
  if (!dataset_path.empty()) {
    const LibsvmData data = read_libsvm(dataset_path);
    h = data.features.transpose();  // columns index the data points
  } else {
    Rng rng(seed);
    h = rng.uniform_matrix(m, n, 0.0, 1.0);
  }
  ProblemInstance p = logdet_simplex_from_matrix(std::move(h));
  p.seed = seed;
  return p;
}

// ---------------------------------------------------------------------------
// Lasso

namespace {
struct LassoData {
  MatrixXd a, at;
  VectorXd b;
};
}  // namespace

ProblemInstance lasso_instance(int m, int n, double lambda,
                               const std::string& kernel_id,
                               std::uint64_t seed) {
  if (kernel_id != "euclidean" && kernel_id != "quartic")
    throw config_error("lasso: kernel must be euclidean or quartic");
  Rng rng(seed);
  auto data = std::make_shared<LassoData>();
  data->a = rng.normal_matrix(m, n);
  VectorXd x_ref = rng.normal_vector(n);
  for (Eigen::Index i = 0; i < x_ref.size(); ++i)
    if (rng.uniform01() > 0.2) x_ref[i] = 0.0;  // sparse reference signal
  data->b = noisy_output(data->a * x_ref, 0.1, rng);
  data->at = data->a.transpose();

  ProblemInstance p;
  p.name = "lasso";
  p.m = m;
  p.n = n;
  p.seed = seed;
  p.kernel_id = kernel_id;
  p.kernel = make_run_kernel(kernel_id, n, seed);
  p.g_kind = NonsmoothKind::L1;
  p.g_lambda = lambda;

  p.f_value = [data](const VectorXd& x) {
    return 0.5 * (par::matvec_t(data->at, x) - data->b).squaredNorm();
  };
  p.f_gradient = [data](const VectorXd& x) {
    const VectorXd r = par::matvec_t(data->at, x) - data->b;
    return VectorXd(par::matvec_t(data->a, r));
  };
  p.g_value = [lambda](const VectorXd& x) { return lambda * x.lpNorm<1>(); };
  p.prox = make_prox(p.kernel, NonsmoothKind::L1, lambda);

  const double na = spectral_norm(data->a);
  p.global_modulus = na * na;  // same constant for both kernel choices
  p.feasible_start = VectorXd::Zero(n);
  return p;
}

// ---------------------------------------------------------------------------
// LIBSVM input

LibsvmData read_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open " + path);

  std::vector<double> labels;
  std::vector<std::vector<std::pair<int, double>>> rows;
  int max_index = 0;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank line

    const auto fail = [&](const std::string& what) -> void {
      throw parse_error(path + ":" + std::to_string(lineno) + ": " + what);
    };

    double label = 0.0;
    {
      const char* b = tok.data();
      auto [ptr, ec] = std::from_chars(b, b + tok.size(), label);
      if (ec != std::errc{} || ptr != b + tok.size())
        fail("bad label '" + tok + "'");
    }

    std::vector<std::pair<int, double>> row;
    int prev_index = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        fail("expected index:value, got '" + tok + "'");
      int index = 0;
      double value = 0.0;
      {
        const char* b = tok.data();
        auto [ptr, ec] = std::from_chars(b, b + colon, index);
        if (ec != std::errc{} || ptr != b + colon)
          fail("bad index in '" + tok + "'");
      }
      {
        const char* b = tok.data() + colon + 1;
        const char* e = tok.data() + tok.size();
        auto [ptr, ec] = std::from_chars(b, e, value);
        if (ec != std::errc{} || ptr != e) fail("bad value in '" + tok + "'");
      }
      if (index <= prev_index)
        fail("indices must be strictly increasing (1-based)");
      prev_index = index;
      max_index = std::max(max_index, index);
      row.emplace_back(index, value);
    }
    labels.push_back(label);
    rows.push_back(std::move(row));
  }

  LibsvmData out;
  out.features =
      MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
  out.labels = Eigen::Map<VectorXd>(labels.data(),
                                    static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [idx, val] : rows[i])
      out.features(static_cast<Eigen::Index>(i), idx - 1) = val;
  return out;
}

// ---------------------------------------------------------------------------
// Subgradient inclusion residual

double subgradient_residual(const Kernel& kernel,
                            const ProblemInstance& problem,
                            const VectorXd& x_from, const VectorXd& x_to,
                            const VectorXd& v, double gamma) {
  const VectorXd u =
      (kernel.gradient(x_from) - kernel.gradient(x_to)) / gamma - v;
  switch (problem.g_kind) {
    case NonsmoothKind::Zero:
      return u.lpNorm<Eigen::Infinity>();
    case NonsmoothKind::L1: {
      const double lambda = problem.g_lambda;
      double worst = 0.0;
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double r =
            (x_to[i] != 0.0)
                ? std::abs(u[i] - (x_to[i] > 0.0 ? lambda : -lambda))
                : std::max(0.0, std::abs(u[i]) - lambda);
        worst = std::max(worst, r);
      }
      return worst;
    }
    case NonsmoothKind::SimplexIndicator: {
      // Normal cone: u_i = c on the support, u_i <= c elsewhere.
      double lo = kInf, hi = -kInf;
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (x_to[i] > 0.0) {
          lo = std::min(lo, u[i]);
          hi = std::max(hi, u[i]);
        }
      }
      const double c = 0.5 * (lo + hi);
      double worst = 0.5 * (hi - lo);
      for (Eigen::Index i = 0; i < u.size(); ++i)
        if (x_to[i] <= 0.0) worst = std::max(worst, u[i] - c);
      return worst;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Factory

ProblemInstance build_instance(const std::string& family, int m, int n,
                               double lambda, double noise_scale,
                               std::uint64_t seed, const std::string& kernel_id,
                               const std::string& dataset_path) {
  if (family == "poly_hessian")
    return poly_hessian_instance(m, n, seed, kernel_id, noise_scale);
  if (family == "kl_regression") {
    if (kernel_id != "entropy")
      throw config_error("kl_regression requires the entropy kernel");
    return kl_regression_instance(m, n, lambda, seed, noise_scale);
  }
  if (family == "logdet_simplex") {
    if (kernel_id != "entropy")
      throw config_error("logdet_simplex requires the entropy kernel");
    return logdet_simplex_instance(m, n, seed, dataset_path);
  }
  if (family == "lasso") return lasso_instance(m, n, lambda, kernel_id, seed);
  throw config_error("unknown problem family: " + family);
}

}  // namespace bregman
