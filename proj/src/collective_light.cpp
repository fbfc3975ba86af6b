#include "weakclock/collective_light.hpp"

#include <cmath>

#include "weakclock/errors.hpp"

namespace weakclock {

namespace {

void check_inputs(double chi_tp, double tau, int steps, double N) {
  if (!(chi_tp >= 0.0) || !std::isfinite(chi_tp)) throw DomainError("chi_tp must be finite and >= 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive");
  if (steps < 1) throw DomainError("steps must be >= 1");
  if (!(N > 0.0) || !std::isfinite(N)) throw DomainError("N must be positive");
}

}  // namespace

CollectiveMoments coherent_spin_moments(double N) {
  CollectiveMoments m;
  m.mean = Eigen::Vector3d(0.5 * N, 0.0, 0.0);
  m.second.diagonal() << 0.25 * N * N, 0.25 * N, 0.25 * N;
  return m;
}

CollectiveMoments propagate_collective_moments(double chi_tp, double omega, double tau, int steps,
                                               double N) {
  check_inputs(chi_tp, tau, steps, N);
  const double angle = 2.0 * omega * tau;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix3d rot;
  rot << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  Eigen::Matrix3d d_rot;
  d_rot << -s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0;
  d_rot *= 2.0 * tau;

  // Kick angle chi_tp * X with Var(X) = 1/2.
  const double kick_var = 0.5 * chi_tp * chi_tp;
  const double mean_cos = std::exp(-0.5 * kick_var);
  const double mean_cos2 = 0.5 * (1.0 + std::exp(-2.0 * kick_var));
  const double mean_sin2 = 1.0 - mean_cos2;
  const Eigen::Matrix3d kick_mean = Eigen::Vector3d(1.0, mean_cos, mean_cos).asDiagonal();

  CollectiveMoments m = coherent_spin_moments(N);
  for (int k = 0; k < steps; ++k) {
    m.d_mean = kick_mean * (rot * m.d_mean + d_rot * m.mean);
    m.mean = kick_mean * (rot * m.mean);

    const Eigen::Matrix3d r = rot * m.second * rot.transpose();
    // E[M r M^T] for a rotation M about x by a zero-mean Gaussian angle;
    // the odd moments <sin>, <sin cos> vanish.
    Eigen::Matrix3d out;
    out(0, 0) = r(0, 0);
    out(0, 1) = mean_cos * r(0, 1);
    out(0, 2) = mean_cos * r(0, 2);
    out(1, 1) = mean_cos2 * r(1, 1) + mean_sin2 * r(2, 2);
    out(2, 2) = mean_sin2 * r(1, 1) + mean_cos2 * r(2, 2);
    out(1, 2) = (mean_cos2 - mean_sin2) * r(1, 2);
    out(1, 0) = out(0, 1);
    out(2, 0) = out(0, 2);
    out(2, 1) = out(1, 2);
    m.second = out;
  }
  return m;
}

double light_closed_form_variance(double chi_tp, double omega, double tau, int steps, double N) {
  check_inputs(chi_tp, tau, steps, N);
  const double T = steps * tau;
  const double s = std::sin(2.0 * omega * T);
  return 0.25 * N * s * s -
         chi_tp * chi_tp / 64.0 * N * steps / std::tan(omega * tau) * std::sin(4.0 * omega * T);
}

double light_sensitivity(double chi_tp, double omega, double tau, int steps, double N) {
  check_inputs(chi_tp, tau, steps, N);
  const double T = steps * tau;
  if (std::abs(std::sin(2.0 * omega * T)) < 1e-9) {
    throw DegenerateError("sin(2 omega T) vanishes; the J_x slope is zero");
  }
  const CollectiveMoments m = propagate_collective_moments(chi_tp, omega, tau, steps, N);
  const double slope = m.d_mean(0);
  if (slope == 0.0) throw DegenerateError("J_x slope is zero");
  return m.covariance()(0, 0) / (slope * slope);
}

}  // namespace weakclock
