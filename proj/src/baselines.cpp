#include "weakclock/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "weakclock/errors.hpp"
#include "weakclock/parallel.hpp"
#include "weakclock/rng.hpp"

namespace weakclock {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxOciQubits = 512;
constexpr double kEigenFloor = 1e-12;

// sin(x) / x with the removable singularity filled in.
double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// (1/a) * integral_0^a w sin(b w) dw, the kernel of the prior-weighted
// derivative of the averaged state; odd in b.
double first_moment_kernel(double a, double b) {
  const double x = a * b;
  if (std::abs(x) < 1e-4) {
    // Series of (sin x - x cos x) / (b^2 a) = a x (1/3 - x^2/30 + ...).
    return a * x * (1.0 / 3.0 - x * x / 30.0);
  }
  return (std::sin(x) / (b * b) - a * std::cos(x) / b) / a;
}

std::vector<double> binomial_amplitudes(int N) {
  std::vector<double> c(N + 1);
  const double log_norm = N * std::log(2.0);
  for (int k = 0; k <= N; ++k) {
    const double log_binom = std::lgamma(N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0);
    c[k] = std::exp(0.5 * (log_binom - log_norm));
  }
  return c;
}

}  // namespace

OciResult oci_bound(int N, double T, double delta_omega) {
  if (N < 1) throw DomainError("N must be positive");
  if (N > kMaxOciQubits) {
    throw GuardError("optimal-interferometer bound limited to N <= 512, got " + std::to_string(N));
  }
  if (!(T >= 0.0) || !std::isfinite(T)) throw DomainError("T must be finite and non-negative");
  if (!(delta_omega > 0.0) || !std::isfinite(delta_omega)) {
    throw DomainError("delta_omega must be positive and finite");
  }

  // Centered prior on [-a, a]; the BMSE is invariant under the shift.
  const double a = 0.5 * delta_omega;
  const int dim = N + 1;
  const std::vector<double> c = binomial_amplitudes(N);

  // rho_bar is real symmetric; rho_bar' = -i K with K real antisymmetric.
  Eigen::MatrixXd rho(dim, dim);
  Eigen::MatrixXd K(dim, dim);
  for (int k = 0; k < dim; ++k) {
    for (int l = 0; l < dim; ++l) {
      const int gap = k - l;
      rho(k, l) = c[k] * c[l] * sinc(delta_omega * T * gap);
      K(k, l) = gap == 0 ? 0.0 : c[k] * c[l] * first_moment_kernel(a, 2.0 * T * gap);
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rho);
  if (eig.info() != Eigen::Success) throw NumericError("eigen-decomposition of averaged state failed");
  const Eigen::VectorXd p = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd& V = eig.eigenvectors();
  const double floor = kEigenFloor * p.maxCoeff();

  // L = -i L_K in the eigenbasis with (L_K)_jk = 2 (V^T K V)_jk / (p_j + p_k).
  Eigen::MatrixXd Kt = V.transpose() * K * V;
  if ((Kt + Kt.transpose()).norm() > 1e-10 * std::max(1e-300, Kt.norm())) {
    throw NumericError("derivative of averaged state lost anti-Hermiticity");
  }
  // Small eigenvalues amplify rounding; restore exact antisymmetry before dividing.
  Kt = 0.5 * (Kt - Kt.transpose()).eval();
  Eigen::MatrixXd Lt = Eigen::MatrixXd::Zero(dim, dim);
  double info = 0.0;
  for (int j = 0; j < dim; ++j) {
    for (int k = 0; k < dim; ++k) {
      const double denom = p(j) + p(k);
      if (denom <= floor) continue;
      Lt(j, k) = 2.0 * Kt(j, k) / denom;
      info += p(j) * Lt(j, k) * Lt(j, k);
    }
  }

  const Eigen::MatrixXd L = V * Lt * V.transpose();
  const Eigen::MatrixXd anti = 0.5 * (L * rho + rho * L);
  OciResult result;
  result.prior_variance = delta_omega * delta_omega / 12.0;
  result.bmse = std::clamp(result.prior_variance - info, 0.0, result.prior_variance);
  const double scale = K.norm();
  result.residual = scale > 0.0 ? (anti - K).norm() / scale : 0.0;
  return result;
}

int CascadedPlan::total() const {
  int n = 0;
  for (int s : sizes) n += s;
  return n;
}

CascadedPlan cascaded_plan(int N, int M, double T) {
  if (M < 1 || N < 1) throw DomainError("cascaded plan needs N >= 1 and M >= 1");
  if (N % M != 0) {
    throw DomainError("equal cascaded split needs M | N (N=" + std::to_string(N) +
                      ", M=" + std::to_string(M) + ")");
  }
  return cascaded_plan_balanced(N, M, T);
}

CascadedPlan cascaded_plan_balanced(int N, int M, double T) {
  if (M < 1 || N < M) throw DomainError("cascaded plan needs 1 <= M <= N");
  if (!(T > 0.0)) throw DomainError("T must be positive");
  CascadedPlan plan;
  plan.M = M;
  for (int i = 0; i < M; ++i) {
    plan.sizes.push_back(N / M + (i < N % M ? 1 : 0));
    plan.times.push_back(T / std::ldexp(1.0, i));
  }
  return plan;
}

std::vector<double> cascaded_fisher_terms(const CascadedPlan& plan) {
  std::vector<double> terms;
  for (int i = 0; i < plan.M; ++i) terms.push_back(4.0 * plan.sizes[i] * plan.times[i] * plan.times[i]);
  return terms;
}

double cascaded_fisher(const CascadedPlan& plan) {
  for (int s : plan.sizes) {
    if (s != plan.sizes.front()) throw DomainError("cascaded Fisher information needs an equal split");
  }
  double total = 0.0;
  for (double t : cascaded_fisher_terms(plan)) total += t;
  return total;
}

double cascaded_fisher_closed_form(int N, int M, double T) {
  if (M < 1 || N < 1) throw DomainError("cascaded closed form needs N, M >= 1");
  return 16.0 * N * T * T / (3.0 * M) * (1.0 - std::pow(4.0, -M));
}

int cascaded_min_ensembles(double delta_omega, double T) {
  if (!(delta_omega > 0.0) || !(T > 0.0)) throw DomainError("need delta_omega, T > 0");
  int M = 1;
  while (delta_omega * T / std::ldexp(1.0, M - 1) > kPi * (1.0 + 1e-12)) ++M;
  return M;
}

CascadedResult cascaded_bmse_for_plan(const CascadedPlan& plan, const Prior& prior, long n_rep,
                                      std::uint64_t seed, int workers) {
  prior.validate();
  if (n_rep < 100) throw DomainError("cascaded BMSE needs at least 100 repetitions");
  const double T = plan.times.front();
  const int N = plan.total();
  // Grid fine enough for the narrowest likelihood peak, about 1 / (2 sqrt(N) T) wide.
  const double wanted = 16.0 * prior.width() * T * std::sqrt(static_cast<double>(N));
  const int points = static_cast<int>(std::clamp(wanted, 2048.0, static_cast<double>(1 << 20)));

  std::vector<double> omegas(points);
  for (int j = 0; j < points; ++j) omegas[j] = prior.lo + prior.width() * (j + 0.5) / points;
  // log p(0) and log p(1) per ensemble and grid point.
  std::vector<std::vector<double>> log_p0(plan.M), log_p1(plan.M);
  for (int i = 0; i < plan.M; ++i) {
    log_p0[i].resize(points);
    log_p1[i].resize(points);
    for (int j = 0; j < points; ++j) {
      const double c = std::cos(2.0 * omegas[j] * plan.times[i]);
      log_p0[i][j] = std::log(0.5 * (1.0 + c));
      log_p1[i][j] = std::log(0.5 * (1.0 - c));
    }
  }

  std::vector<double> squared(n_rep);
  parallel_for(static_cast<std::size_t>(n_rep), workers, [&](std::size_t r) {
    const double omega = prior_draw(prior, static_cast<long>(r), n_rep, seed, true);
    Engine rng(trajectory_seed(seed, r));
    std::vector<int> zeros(plan.M, 0);
    for (int i = 0; i < plan.M; ++i) {
      const double p0 = 0.5 * (1.0 + std::cos(2.0 * omega * plan.times[i]));
      for (int q = 0; q < plan.sizes[i]; ++q) zeros[i] += uniform01(rng) < p0 ? 1 : 0;
    }
    std::vector<double> logpost(points, 0.0);
    double peak = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < points; ++j) {
      double lp = 0.0;
      for (int i = 0; i < plan.M; ++i) {
        const int ones = plan.sizes[i] - zeros[i];
        if (zeros[i] > 0) lp += zeros[i] * log_p0[i][j];
        if (ones > 0) lp += ones * log_p1[i][j];
      }
      logpost[j] = lp;
      peak = std::max(peak, lp);
    }
    double norm = 0.0;
    double mean = 0.0;
    for (int j = 0; j < points; ++j) {
      const double w = std::exp(logpost[j] - peak);
      norm += w;
      mean += w * omegas[j];
    }
    const double estimate = norm > 0.0 ? mean / norm : prior.mean();
    squared[r] = (estimate - omega) * (estimate - omega);
  });

  double mean = 0.0;
  for (double s : squared) mean += s;
  mean /= n_rep;
  double var = 0.0;
  for (double s : squared) var += (s - mean) * (s - mean);
  var /= (n_rep - 1);
  CascadedResult result;
  result.bmse = mean;
  result.std_error = std::sqrt(var / n_rep);
  result.chosen_M = plan.M;
  return result;
}

CascadedResult cascaded_bmse(int N, double T, const Prior& prior, long n_rep, std::uint64_t seed,
                             int workers) {
  prior.validate();
  if (N < 1) throw DomainError("N must be positive");
  const int M0 = cascaded_min_ensembles(prior.width(), T);
  CascadedResult best;
  best.feasible = false;
  best.bmse = prior.variance();
  for (int M = std::max(1, M0 - 1); M <= M0 + 1; ++M) {
    if (M > N) break;
    const CascadedResult r =
        cascaded_bmse_for_plan(cascaded_plan_balanced(N, M, T), prior, n_rep, seed, workers);
    if (!best.feasible || r.bmse < best.bmse) {
      best = r;
      best.feasible = true;
    }
  }
  return best;
}

}  // namespace weakclock
