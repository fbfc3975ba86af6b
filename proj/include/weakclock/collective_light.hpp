#pragma once

#include <Eigen/Core>

namespace weakclock {

/// First and second moments of the collective spin (J_x, J_y, J_z).
struct CollectiveMoments {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  /// d mean / d omega, seconds times spin units.
  Eigen::Vector3d d_mean = Eigen::Vector3d::Zero();
  /// Symmetrized second moments <{J_a, J_b}> / 2.
  Eigen::Matrix3d second = Eigen::Matrix3d::Zero();

  Eigen::Matrix3d covariance() const { return second - mean * mean.transpose(); }
};

/// Coherent spin state of N atoms pointing along x.
CollectiveMoments coherent_spin_moments(double N);

/// Propagates the moments through `steps` cycles of free rotation by
/// 2 omega tau about z followed by a dispersive light kick, a rotation about x
/// by the Gaussian angle chi_tp * X with vacuum quadrature X. Light averages
/// are taken exactly: <cos> = exp(-chi_tp^2 / 4), <sin> = 0.
CollectiveMoments propagate_collective_moments(double chi_tp, double omega, double tau, int steps,
                                               double N);

/// Large-N, many-step approximation to Var(J_x) at T = steps tau:
/// (N/4) sin^2(2 omega T) - chi_tp^2 / 64 N (T / tau) cot(omega tau) sin(4 omega T).
double light_closed_form_variance(double chi_tp, double omega, double tau, int steps, double N);

/// Var(J_x(T)) / (d<J_x(T)>/d omega)^2 in (rad/s)^2. DegenerateError when
/// sin(2 omega T) vanishes.
double light_sensitivity(double chi_tp, double omega, double tau, int steps, double N);

}  // namespace weakclock
