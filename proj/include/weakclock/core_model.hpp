#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

namespace weakclock {

enum class ProtocolMode { WeakOnly, WeakWithStrong };

std::string_view to_string(ProtocolMode mode);
ProtocolMode protocol_mode_from_string(std::string_view name);

/// All knobs of one sequential weak-measurement Ramsey experiment.
///
/// Units: seconds for tau and T, rad/s for delta_omega. The measurement
/// strength g lives in [0, pi/4]; g = pi/4 is projective and g = 0 is the
/// non-informative identity instrument.
struct ProtocolParams {
  double g = 0.1;
  double tau = 0.1;
  double T = 1.0;
  int N = 1;
  /// Prior width. Zero means "not bound to a prior"; the aliasing guard
  /// delta_omega * tau <= pi/2 is only enforced when it is positive.
  double delta_omega = 0.0;
  double p_e = 0.0;
  /// Bit-flip probability of the final projective readout.
  double p_e_strong = 0.0;
  ProtocolMode mode = ProtocolMode::WeakWithStrong;

  /// Builds params whose period is set by the prior, tau = pi / (2 delta_omega).
  static ProtocolParams from_prior(double g, double delta_omega, double T, int N,
                                   ProtocolMode mode = ProtocolMode::WeakWithStrong,
                                   double p_e = 0.0);

  /// m = floor(T / tau).
  int steps() const;
  /// Weak measurements per qubit: m in weak-only mode, m - 1 otherwise.
  int weak_steps() const;
  bool has_strong() const { return mode == ProtocolMode::WeakWithStrong; }
  /// Back-action parameter g^2 T / tau.
  double eta() const { return g * g * T / tau; }

  /// Throws DomainError when any invariant is violated.
  void validate() const;
};

/// Stable 64-bit digest of the parameter values, used to tag serialized
/// trajectories.
std::uint64_t params_hash(const ProtocolParams& params);

/// Equatorial qubit state: Bloch radius r and in-plane angle phi in (-pi, pi].
struct PlanarState {
  double r = 1.0;
  double phi = 0.0;
};

struct KrausPair {
  Eigen::Matrix2cd plus;
  Eigen::Matrix2cd minus;
};

struct OutcomeProbabilities {
  double p0 = 0.5;
  double p1 = 0.5;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// K_pm = (cos g I +- sin g sigma_x) / sqrt 2, g in (0, pi/4].
KrausPair kraus_pair(double g);

/// Outcome probabilities of one weak sigma_x measurement read out through a
/// bit-flip channel: p_x = (1 + (-1)^x (1 - 2 p_e) sin(2g) r cos(phi)) / 2.
OutcomeProbabilities weak_meas_probabilities(const PlanarState& state, double g, double p_e);

/// One protocol step: back-action of outcome x (x = 0 selects K_+), then free
/// rotation by -2 omega tau.
PlanarState planar_state_update(const PlanarState& state, int outcome, double g, double omega,
                                double tau, double p_e);

/// gamma = -log(cos 2g) / (2 tau). Returns +infinity at g = pi/4, where the
/// channel dephases completely in one step.
double dephasing_rate(double g, double tau);

/// Closed-form measurement-averaged dynamics of the equatorial Bloch vector:
/// r_x(k tau) = cos(2g)^(k/2) A cos(alpha k + phi0).
struct AveragedDynamics {
  double alpha = 0.0;
  double A = 1.0;
  double phi0 = 0.0;
  double gamma = 0.0;
  double g = 0.0;
  double tau = 0.0;

  /// r_x just before the k-th measurement (k >= 0; k = 0 is the initial state).
  double rx(int k) const;
  /// Averaged probability of outcome 0 at the k-th measurement.
  double p0(int k) const;
};

/// Throws DegenerateError when sin(2 omega tau) = 0 or the averaged map has
/// real eigenvalues, where the oscillating closed form does not apply.
AveragedDynamics averaged_dynamics(double g, double omega, double tau);

}  // namespace weakclock
