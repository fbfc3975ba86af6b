#pragma once

#include <cstdint>
#include <vector>

#include "weakclock/estimation.hpp"

namespace weakclock {

struct OciResult {
  /// Minimal BMSE over all measurements of the coherent spin state, (rad/s)^2.
  double bmse = 0.0;
  double prior_variance = 0.0;
  /// Frobenius norm of (1/2){L, rho} - rho', relative to that of rho'.
  double residual = 0.0;
};

/// Optimal classical interferometer: the smallest BMSE any measurement of the
/// N-qubit coherent spin state can reach after interrogation time T, for a
/// uniform prior of width delta_omega. Solved in the (N + 1)-dimensional
/// symmetric subspace; refuses N > 512 with GuardError.
OciResult oci_bound(int N, double T, double delta_omega);

/// Ensemble i holds sizes[i] qubits interrogated for times[i] = T / 2^i.
struct CascadedPlan {
  int M = 1;
  std::vector<int> sizes;
  std::vector<double> times;

  int total() const;
};

/// Equal split of N qubits into M ensembles; DomainError unless M divides N.
CascadedPlan cascaded_plan(int N, int M, double T);
/// Split into M ensembles whose sizes differ by at most one, larger ones first.
CascadedPlan cascaded_plan_balanced(int N, int M, double T);

/// Sum over ensembles of 4 N_i T_i^2. Requires an equal split.
double cascaded_fisher(const CascadedPlan& plan);
/// Per-ensemble terms 4 N_i T_i^2.
std::vector<double> cascaded_fisher_terms(const CascadedPlan& plan);
/// (16 N T^2 / 3 M)(1 - 4^-M).
double cascaded_fisher_closed_form(int N, int M, double T);

/// Smallest M with delta_omega T / 2^(M-1) <= pi.
int cascaded_min_ensembles(double delta_omega, double T);

struct CascadedResult {
  double bmse = 0.0;
  double std_error = 0.0;
  int chosen_M = 0;
  /// False when no candidate M can be formed from N qubits; bmse is then the
  /// prior variance.
  bool feasible = true;
};

/// BMSE of one fixed plan: projective Ramsey readout of every ensemble, joint
/// grid posterior over the prior, posterior-mean estimate.
CascadedResult cascaded_bmse_for_plan(const CascadedPlan& plan, const Prior& prior, long n_rep,
                                      std::uint64_t seed, int workers = 1);

/// Tries M0 - 1, M0, M0 + 1 around cascaded_min_ensembles (balanced splits)
/// and keeps the smallest measured BMSE.
CascadedResult cascaded_bmse(int N, double T, const Prior& prior, long n_rep, std::uint64_t seed,
                             int workers = 1);

}  // namespace weakclock
