#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "weakclock/core_model.hpp"

namespace weakclock {

/// Measurement record of N independent qubits for one run of the protocol.
///
/// Weak outcomes are stored qubit-major: qubit q occupies
/// weak[q * weak_steps, (q + 1) * weak_steps). Outcome 0 corresponds to K_+.
struct Trajectory {
  int qubits = 0;
  int weak_steps = 0;
  bool has_strong = false;
  std::vector<std::uint8_t> weak;
  std::vector<std::uint8_t> strong;
  std::uint64_t seed = 0;
  std::uint64_t params_hash = 0;

  std::span<const std::uint8_t> weak_outcomes(int qubit) const {
    return {weak.data() + static_cast<std::size_t>(qubit) * weak_steps,
            static_cast<std::size_t>(weak_steps)};
  }

  bool operator==(const Trajectory&) const = default;
};

struct ScoredLikelihood {
  double log_likelihood = 0.0;
  /// d log p / d omega, in seconds.
  double score = 0.0;
  /// Set when some step had probability exactly zero at the queried omega;
  /// log_likelihood is then -infinity and score is meaningless.
  bool zero_probability = false;
};

/// Seed of qubit `qubit` inside a trajectory with seed `trajectory_seed`.
std::uint64_t qubit_seed(std::uint64_t trajectory_seed, int qubit);
/// Seed of trajectory `index` in a batch with root seed `root`.
std::uint64_t trajectory_seed(std::uint64_t root, std::uint64_t index);

/// Samples one record. Each qubit draws from its own sub-stream, so the
/// result depends only on (params, omega, seed).
Trajectory simulate_trajectory(const ProtocolParams& params, double omega, std::uint64_t seed);

/// Samples trajectories[i] at omegas[i] with seed trajectory_seed(root, i).
/// The output is identical for every worker count.
std::vector<Trajectory> simulate_batch(const ProtocolParams& params, std::span<const double> omegas,
                                       std::uint64_t root_seed, int workers = 1);

/// Replays the record at omega and returns the exact log-likelihood together
/// with its analytic omega-derivative.
ScoredLikelihood score_trajectory(const Trajectory& traj, double omega,
                                  const ProtocolParams& params);

/// Log-likelihood only. Same value as score_trajectory, cheaper; used inside
/// estimators. Returns -infinity when some step has probability zero.
double log_likelihood(const Trajectory& traj, double omega, const ProtocolParams& params);

/// Single-qubit outcome record scored in one pass; the helper behind the
/// Monte-Carlo Fisher information.
double sample_single_qubit_score(const ProtocolParams& params, double omega, std::uint64_t seed);

/// Draws the weak outcomes of one qubit (same stream as
/// sample_single_qubit_score) and returns the squared score with the final
/// projective outcome averaged out analytically. Unbiased for the single-qubit
/// CFI; in weak-only mode it is just the squared score.
double sample_single_qubit_fisher(const ProtocolParams& params, double omega, std::uint64_t seed);

/// One full outcome string of all qubits with its probability. Bit
/// (q * per_qubit + k) holds outcome k of qubit q, where per_qubit = m and the
/// strong outcome (if any) is the last bit of each qubit's block.
struct OutcomeString {
  std::uint32_t bits = 0;
  double probability = 0.0;
};

/// All 2^(N m) outcome strings with their exact probabilities. Refuses with
/// GuardError when N * m exceeds max_bits (itself capped at 20).
std::vector<OutcomeString> enumerate_outcome_distribution(const ProtocolParams& params,
                                                          double omega, int max_bits = 20);

/// Converts an enumerated bit string into a Trajectory for scoring.
Trajectory trajectory_from_bits(const ProtocolParams& params, std::uint32_t bits);

/// Compact JSON form: bit-packed hex outcome strings, seed and params hash.
std::string trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const std::string& text);

}  // namespace weakclock
