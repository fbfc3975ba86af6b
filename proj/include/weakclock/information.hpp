#pragma once

#include <cstdint>
#include <string_view>

#include "weakclock/core_model.hpp"

namespace weakclock {

enum class InformationKind {
  MonteCarlo,
  QFI,
  WeakAsymptotic,
  StrongAsymptotic,
  FitWeakOnly,
  FitWeakWithStrong,
  MolmerBound,
  OptimalG,
};

std::string_view to_string(InformationKind kind);

/// Fisher information in s^2. std_error is zero for closed forms. For
/// InformationKind::OptimalG the value is a measurement strength, not an
/// information.
struct InformationEstimate {
  double value = 0.0;
  double std_error = 0.0;
  InformationKind kind = InformationKind::MonteCarlo;
};

struct CfiOptions {
  /// Sample whole N-qubit records instead of scaling the single-qubit value by N.
  bool full_records = false;
  int workers = 1;
};

/// Monte-Carlo classical Fisher information at a fixed omega: mean squared
/// score over K sampled records. Requires K >= 100.
InformationEstimate cfi_monte_carlo(const ProtocolParams& params, double omega, long K,
                                    std::uint64_t seed, const CfiOptions& options = {});

/// Same estimator with omega redrawn for every record from the uniform prior
/// [omega_lo, omega_hi] (stratified: record i falls in stratum i of K). This is
/// the prior-averaged information that enters the Bayesian bound.
InformationEstimate cfi_prior_averaged(const ProtocolParams& params, double omega_lo,
                                       double omega_hi, long K, std::uint64_t seed,
                                       const CfiOptions& options = {});

/// Closed-form informations and bounds. MonteCarlo is rejected.
///   QFI               4 N T^2
///   WeakAsymptotic    (8/3) N g^2 T^3 / tau
///   StrongAsymptotic  4 N T tau / g^2
///   FitWeakOnly       WeakAsymptotic / (1 + 0.77 eta + (2/3) eta^2)
///   FitWeakWithStrong 4 N T^2 / (1 - 0.13 g sqrt(T/tau) + eta)
///   MolmerBound       4 N T tau cot^2 g
///   OptimalG          sqrt(tau/T) (3/2)^(1/4)
/// The two fit constants 0.77 and 0.13 are empirical.
InformationEstimate analytic_information(InformationKind kind, const ProtocolParams& params);

}  // namespace weakclock
