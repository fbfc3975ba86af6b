#include "weakclock/information.hpp"

#include <cmath>
#include <vector>

#include "weakclock/errors.hpp"
#include "weakclock/parallel.hpp"
#include "weakclock/rng.hpp"
#include "weakclock/trajectory.hpp"

namespace weakclock {

namespace {

constexpr double kWeakOnlyLinear = 0.77;
constexpr double kWeakWithStrongRoot = 0.13;

// Stream index offset that keeps prior draws apart from trajectory seeds.
constexpr std::uint64_t kOmegaStream = 0x5EED0F0A11ULL;

InformationEstimate summarize(const std::vector<double>& squares, double scale) {
  const double n = static_cast<double>(squares.size());
  double mean = 0.0;
  for (double s : squares) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : squares) var += (s - mean) * (s - mean);
  var /= (n - 1.0);
  InformationEstimate est;
  est.value = scale * mean;
  est.std_error = scale * std::sqrt(var / n);
  est.kind = InformationKind::MonteCarlo;
  return est;
}

template <typename OmegaOf>
InformationEstimate run_monte_carlo(const ProtocolParams& params, long K, std::uint64_t seed,
                                    const CfiOptions& options, OmegaOf omega_of) {
  params.validate();
  if (K < 100) throw DomainError("Monte-Carlo CFI needs K >= 100 records");
  std::vector<double> squares(static_cast<std::size_t>(K));
  if (options.full_records) {
    parallel_for(squares.size(), options.workers, [&](std::size_t i) {
      const double omega = omega_of(i);
      const Trajectory traj = simulate_trajectory(params, omega, trajectory_seed(seed, i));
      const double score = score_trajectory(traj, omega, params).score;
      squares[i] = score * score;
    });
    return summarize(squares, 1.0);
  }
  parallel_for(squares.size(), options.workers, [&](std::size_t i) {
    squares[i] = sample_single_qubit_fisher(params, omega_of(i), trajectory_seed(seed, i));
  });
  return summarize(squares, static_cast<double>(params.N));
}

}  // namespace

std::string_view to_string(InformationKind kind) {
  switch (kind) {
    case InformationKind::MonteCarlo: return "monte-carlo";
    case InformationKind::QFI: return "qfi";
    case InformationKind::WeakAsymptotic: return "weak-asymptotic";
    case InformationKind::StrongAsymptotic: return "strong-asymptotic";
    case InformationKind::FitWeakOnly: return "fit-weak-only";
    case InformationKind::FitWeakWithStrong: return "fit-weak-with-strong";
    case InformationKind::MolmerBound: return "molmer-bound";
    case InformationKind::OptimalG: return "optimal-g";
  }
  return "unknown";
}

InformationEstimate cfi_monte_carlo(const ProtocolParams& params, double omega, long K,
                                    std::uint64_t seed, const CfiOptions& options) {
  if (!std::isfinite(omega)) throw DomainError("omega must be finite");
  return run_monte_carlo(params, K, seed, options, [omega](std::size_t) { return omega; });
}

InformationEstimate cfi_prior_averaged(const ProtocolParams& params, double omega_lo,
                                       double omega_hi, long K, std::uint64_t seed,
                                       const CfiOptions& options) {
  if (!(omega_hi > omega_lo) || !std::isfinite(omega_lo) || !std::isfinite(omega_hi)) {
    throw DomainError("prior interval must satisfy lo < hi");
  }
  const double width = omega_hi - omega_lo;
  const std::uint64_t omega_root = derive_seed(seed, kOmegaStream);
  auto omega_of = [&](std::size_t i) {
    Engine rng(derive_seed(omega_root, i));
    return omega_lo + width * (static_cast<double>(i) + uniform01(rng)) / static_cast<double>(K);
  };
  return run_monte_carlo(params, K, seed, options, omega_of);
}

InformationEstimate analytic_information(InformationKind kind, const ProtocolParams& params) {
  params.validate();
  const double N = params.N;
  const double T = params.T;
  const double tau = params.tau;
  const double g = params.g;
  const double eta = params.eta();
  InformationEstimate est;
  est.kind = kind;
  auto need_strength = [&] {
    if (!(g > 0.0)) throw DomainError(std::string(to_string(kind)) + " needs g > 0");
  };
  switch (kind) {
    case InformationKind::MonteCarlo:
      throw DomainError("Monte-Carlo information has no closed form");
    case InformationKind::QFI:
      est.value = 4.0 * N * T * T;
      break;
    case InformationKind::WeakAsymptotic:
      est.value = 8.0 / 3.0 * N * g * g * T * T * T / tau;
      break;
    case InformationKind::StrongAsymptotic:
      need_strength();
      est.value = 4.0 * N * T * tau / (g * g);
      break;
    case InformationKind::FitWeakOnly:
      est.value = (8.0 / 3.0 * N * g * g * T * T * T / tau) /
                  (1.0 + kWeakOnlyLinear * eta + 2.0 / 3.0 * eta * eta);
      break;
    case InformationKind::FitWeakWithStrong:
      est.value = 4.0 * N * T * T / (1.0 - kWeakWithStrongRoot * g * std::sqrt(T / tau) + eta);
      break;
    case InformationKind::MolmerBound: {
      need_strength();
      const double cot = std::cos(g) / std::sin(g);
      est.value = 4.0 * N * T * tau * cot * cot;
      break;
    }
    case InformationKind::OptimalG:
      est.value = std::sqrt(tau / T) * std::pow(1.5, 0.25);
      break;
  }
  return est;
}

}  // namespace weakclock
