#pragma once

// Reference computations that share no code with the library: explicit 2x2
// density matrices, exhaustive outcome enumeration and plain quadrature.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "weakclock/core_model.hpp"

namespace oracle {

using Mat2 = Eigen::Matrix2cd;
using cplx = std::complex<double>;

inline Mat2 pauli_x() {
  Mat2 m;
  m << 0, 1, 1, 0;
  return m;
}

inline Mat2 plus_state() {
  Mat2 rho;
  rho << 0.5, 0.5, 0.5, 0.5;
  return rho;
}

// Free evolution exp(i w t sigma_z): the Bloch vector turns by -2 w t about z.
inline Mat2 free_evolution(double omega, double t) {
  Mat2 u = Mat2::Zero();
  u(0, 0) = std::exp(cplx(0.0, omega * t));
  u(1, 1) = std::exp(cplx(0.0, -omega * t));
  return u;
}

inline Mat2 kraus(double g, int outcome) {
  const double sign = outcome == 0 ? 1.0 : -1.0;
  return (std::cos(g) * Mat2::Identity() + sign * std::sin(g) * pauli_x()) / std::sqrt(2.0);
}

// Unnormalized post-measurement state for a recorded weak outcome read out
// through a bit-flip channel with probability p_e.
inline Mat2 weak_branch(const Mat2& rho, double g, double p_e, int outcome) {
  const Mat2 a = kraus(g, outcome);
  const Mat2 b = kraus(g, 1 - outcome);
  return (1.0 - p_e) * a * rho * a.adjoint() + p_e * b * rho * b.adjoint();
}

inline double projective_probability(const Mat2& rho, double p_e, int outcome) {
  const Mat2 proj = 0.5 * (Mat2::Identity() + (outcome == 0 ? 1.0 : -1.0) * pauli_x());
  // rho may be unnormalized; the result is then a joint probability.
  const double p = (proj * rho).trace().real();
  return (1.0 - p_e) * p + p_e * (rho.trace().real() - p);
}

// Probabilities of every single-qubit outcome string; bit i is the i-th
// outcome, the projective one (if any) last.
inline std::vector<double> single_qubit_distribution(const weakclock::ProtocolParams& p,
                                                     double omega) {
  const int m = static_cast<int>(std::floor(p.T / p.tau * (1.0 + 1e-12)));
  const bool strong = p.mode == weakclock::ProtocolMode::WeakWithStrong;
  const int weak = strong ? m - 1 : m;
  const int bits = strong ? weak + 1 : weak;
  const double last = p.T - (m - 1) * p.tau;
  const Mat2 step = free_evolution(omega, p.tau);
  const Mat2 final_step = free_evolution(omega, last);
  std::vector<double> probs(std::size_t{1} << bits);
  for (std::size_t s = 0; s < probs.size(); ++s) {
    Mat2 rho = plus_state();
    for (int i = 0; i < weak; ++i) {
      rho = step * rho * step.adjoint();
      rho = weak_branch(rho, p.g, p.p_e, static_cast<int>((s >> i) & 1u));
    }
    double prob = rho.trace().real();
    if (strong) {
      // Weak steps took (m - 1) tau; the readout happens at T.
      rho = final_step * rho * final_step.adjoint();
      prob = projective_probability(rho, p.p_e_strong, static_cast<int>((s >> weak) & 1u));
    }
    probs[s] = prob;
  }
  return probs;
}

// N times the single-qubit Fisher information, derivatives by central
// differences of the enumerated distribution.
inline double exact_cfi(const weakclock::ProtocolParams& p, double omega, double h = 1e-5) {
  const std::vector<double> plus = single_qubit_distribution(p, omega + h);
  const std::vector<double> minus = single_qubit_distribution(p, omega - h);
  const std::vector<double> mid = single_qubit_distribution(p, omega);
  double info = 0.0;
  for (std::size_t s = 0; s < mid.size(); ++s) {
    if (mid[s] <= 0.0) continue;
    const double d = (plus[s] - minus[s]) / (2.0 * h);
    info += d * d / mid[s];
  }
  return p.N * info;
}

// Composite Gauss-Legendre (5 points per panel) on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        int panels = 400) {
  static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                              0.9061798459386640};
  static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                              0.4786286704993665, 0.2369268850561891};
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double mid = a + (i + 0.5) * h;
    for (int k = 0; k < 5; ++k) total += w[k] * f(mid + 0.5 * h * x[k]);
  }
  return total * 0.5 * h;
}

// Smallest BMSE of a single qubit after phase 2 omega T, over projective
// measurements along (sin th cos ph, sin th sin ph, cos th) with the
// posterior-mean estimator; uniform prior on [0, width].
inline double single_qubit_optimal_bmse(double T, double width) {
  auto bmse_for = [&](double th, double ph) {
    const double nx = std::sin(th) * std::cos(ph);
    const double ny = std::sin(th) * std::sin(ph);
    double second = 0.0;
    for (int sign : {1, -1}) {
      auto p = [&](double w) {
        return 0.5 * (1.0 + sign * (nx * std::cos(2.0 * w * T) - ny * std::sin(2.0 * w * T)));
      };
      const double mass = integrate(p, 0.0, width, 100) / width;
      const double first = integrate([&](double w) { return w * p(w); }, 0.0, width, 100) / width;
      if (mass > 1e-15) second += first * first / mass;
    }
    return width * width / 3.0 - second;
  };
  double best = width * width / 12.0;
  double best_th = 0.0, best_ph = 0.0;
  const int grid = 60;
  for (int i = 0; i <= grid; ++i) {
    for (int j = 0; j < 2 * grid; ++j) {
      const double th = std::numbers::pi * i / grid;
      const double ph = std::numbers::pi * j / grid;
      const double v = bmse_for(th, ph);
      if (v < best) {
        best = v;
        best_th = th;
        best_ph = ph;
      }
    }
  }
  // Local pattern search around the best grid point.
  double step = std::numbers::pi / grid;
  while (step > 1e-7) {
    bool moved = false;
    for (auto [dt, dp] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}) {
      const double v = bmse_for(best_th + dt, best_ph + dp);
      if (v < best) {
        best = v;
        best_th += dt;
        best_ph += dp;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return best;
}

}  // namespace oracle
