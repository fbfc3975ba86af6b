#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "weakclock/core_model.hpp"
#include "weakclock/errors.hpp"

using namespace weakclock;

namespace {

constexpr double kPi = std::numbers::pi;

// Bloch vector (x, y, z) of a 2x2 density matrix.
Eigen::Vector3d bloch(const oracle::Mat2& rho) {
  const double tr = rho.trace().real();
  return {2.0 * rho(0, 1).real() / tr, -2.0 * rho(0, 1).imag() / tr,
          (rho(0, 0) - rho(1, 1)).real() / tr};
}

oracle::Mat2 from_planar(const PlanarState& s) {
  oracle::Mat2 rho;
  const std::complex<double> off(0.5 * s.r * std::cos(s.phi), -0.5 * s.r * std::sin(s.phi));
  rho << 0.5, off, std::conj(off), 0.5;
  return rho;
}

}  // namespace

TEST(KrausPair, CompletenessForSeveralStrengths) {
  for (double g : {1e-4, 0.01, 0.1, 0.4, kPi / 4}) {
    const KrausPair k = kraus_pair(g);
    const Eigen::Matrix2cd sum = k.plus.adjoint() * k.plus + k.minus.adjoint() * k.minus;
    EXPECT_LT((sum - Eigen::Matrix2cd::Identity()).norm(), 1e-14) << "g=" << g;
  }
}

TEST(KrausPair, MatchesReferenceOperators) {
  const double g = 0.23;
  const KrausPair k = kraus_pair(g);
  EXPECT_LT((k.plus - oracle::kraus(g, 0)).norm(), 1e-15);
  EXPECT_LT((k.minus - oracle::kraus(g, 1)).norm(), 1e-15);
}

TEST(KrausPair, RejectsStrengthOutsideDomain) {
  EXPECT_THROW(kraus_pair(-0.1), DomainError);
  EXPECT_THROW(kraus_pair(1.0), DomainError);
  EXPECT_THROW(kraus_pair(0.0), DomainError);
}

TEST(WeakMeasurement, ProbabilitiesNormalizedAndMatchBornRule) {
  for (double g : {0.05, 0.3, kPi / 4}) {
    for (double p_e : {0.0, 0.1, 0.5}) {
      for (double phi : {-2.0, 0.0, 0.7, 3.0}) {
        const PlanarState s{0.8, phi};
        const OutcomeProbabilities p = weak_meas_probabilities(s, g, p_e);
        EXPECT_NEAR(p.p0 + p.p1, 1.0, 1e-15);
        const oracle::Mat2 rho = from_planar(s);
        const double born = oracle::weak_branch(rho, g, p_e, 0).trace().real();
        EXPECT_NEAR(p.p0, born, 1e-14);
      }
    }
  }
}

TEST(PlanarUpdate, AgreesWithDensityMatrixEvolution) {
  // Cross-check of the planar recursion against full 3-vector evolution.
  const double g = 0.17, omega = 1.3, tau = 0.2;
  for (double p_e : {0.0, 0.15}) {
    PlanarState s{1.0, 0.0};
    oracle::Mat2 rho = oracle::plus_state();
    const int outcomes[] = {0, 1, 1, 0, 0, 0, 1, 0, 1, 1};
    for (int x : outcomes) {
      s = planar_state_update(s, x, g, omega, tau, p_e);
      rho = oracle::weak_branch(rho, g, p_e, x);
      const oracle::Mat2 u = oracle::free_evolution(omega, tau);
      rho = u * rho * u.adjoint();
      rho /= rho.trace();
      const Eigen::Vector3d b = bloch(rho);
      EXPECT_NEAR(b.z(), 0.0, 1e-14);
      EXPECT_NEAR(s.r * std::cos(s.phi), b.x(), 1e-12);
      EXPECT_NEAR(s.r * std::sin(s.phi), b.y(), 1e-12);
    }
  }
}

TEST(PlanarUpdate, PurityPreservedWithoutReadoutNoise) {
  PlanarState s{1.0, 0.3};
  for (int i = 0; i < 200; ++i) {
    s = planar_state_update(s, i % 3 == 0 ? 1 : 0, 0.2, 0.9, 0.1, 0.0);
    ASSERT_NEAR(s.r, 1.0, 1e-12) << "step " << i;
  }
}

TEST(PlanarUpdate, ReadoutNoiseNeverIncreasesRadius) {
  PlanarState s{1.0, 0.0};
  for (int i = 0; i < 50; ++i) {
    s = planar_state_update(s, i % 2, 0.2, 0.9, 0.1, 0.2);
    ASSERT_LE(s.r, 1.0 + 1e-12);
  }
  EXPECT_LT(s.r, 1.0);
}

TEST(PlanarUpdate, StrongMeasurementCollapses) {
  const PlanarState s = planar_state_update({1.0, 1.0}, 0, kPi / 4, 0.0, 0.1, 0.0);
  EXPECT_NEAR(s.r, 1.0, 1e-14);
  EXPECT_NEAR(s.phi, 0.0, 1e-14);
}

TEST(PlanarUpdate, RejectsBadOutcome) {
  EXPECT_THROW(planar_state_update({1.0, 0.0}, 2, 0.1, 0.0, 0.1, 0.0), DomainError);
}

TEST(WrapAngle, MapsIntoHalfOpenInterval) {
  EXPECT_NEAR(wrap_angle(3 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(0.5), 0.5, 1e-15);
  EXPECT_NEAR(wrap_angle(-7.0), -7.0 + 2 * kPi, 1e-12);
}

TEST(DephasingRate, SmallStrengthLimit) {
  const double g = 1e-3, tau = 0.1;
  EXPECT_NEAR(dephasing_rate(g, tau), g * g / tau, 1e-9);
  EXPECT_TRUE(std::isinf(dephasing_rate(kPi / 4, tau)));
}

TEST(AveragedDynamics, MatchesEnumeratedMarginals) {
  ProtocolParams p;
  p.g = 0.2;
  p.tau = 0.1;
  p.T = 0.8;
  p.mode = ProtocolMode::WeakOnly;
  const double omega = 2.3;
  const std::vector<double> probs = oracle::single_qubit_distribution(p, omega);
  const AveragedDynamics d = averaged_dynamics(p.g, omega, p.tau);
  for (int k = 1; k <= 8; ++k) {
    double marginal = 0.0;
    for (std::size_t s = 0; s < probs.size(); ++s) {
      if (((s >> (k - 1)) & 1u) == 0) marginal += probs[s];
    }
    EXPECT_NEAR(d.p0(k), marginal, 1e-12) << "k=" << k;
  }
  EXPECT_NEAR(d.rx(0), 1.0, 1e-14);
}

TEST(AveragedDynamics, DegenerateInputs) {
  EXPECT_THROW(averaged_dynamics(0.1, 0.0, 0.1), DegenerateError);
  EXPECT_THROW(averaged_dynamics(kPi / 4, 1.0, 0.1), DegenerateError);
}

TEST(ProtocolParams, StepsAndDerivedQuantities) {
  ProtocolParams p;
  p.tau = 0.1;
  p.T = 0.3;
  EXPECT_EQ(p.steps(), 3);
  EXPECT_EQ(p.weak_steps(), 2);
  p.mode = ProtocolMode::WeakOnly;
  EXPECT_EQ(p.weak_steps(), 3);
  p.g = 0.1;
  p.T = 10.0;
  EXPECT_NEAR(p.eta(), 1.0, 1e-12);
}

TEST(ProtocolParams, FromPriorSetsPeriod) {
  const ProtocolParams p = ProtocolParams::from_prior(0.1, kPi, 2.0, 4);
  EXPECT_NEAR(p.tau, 0.5, 1e-15);
  EXPECT_NEAR(p.delta_omega * p.tau, kPi / 2, 1e-15);
}

TEST(ProtocolParams, ValidationRejectsBadValues) {
  ProtocolParams p;
  p.tau = 0.1;
  p.T = 1.0;
  EXPECT_NO_THROW(p.validate());
  ProtocolParams q = p;
  q.T = 0.05;
  EXPECT_THROW(q.validate(), DomainError);
  q = p;
  q.N = 0;
  EXPECT_THROW(q.validate(), DomainError);
  q = p;
  q.p_e = 0.6;
  EXPECT_THROW(q.validate(), DomainError);
  q = p;
  q.delta_omega = 20.0;  // 20 * 0.1 > pi / 2
  EXPECT_THROW(q.validate(), DomainError);
  q = p;
  q.g = 0.9;
  EXPECT_THROW(q.validate(), DomainError);
}

TEST(ProtocolParams, HashDistinguishesParameters) {
  ProtocolParams a;
  ProtocolParams b = a;
  EXPECT_EQ(params_hash(a), params_hash(b));
  b.g = 0.11;
  EXPECT_NE(params_hash(a), params_hash(b));
  b = a;
  b.mode = ProtocolMode::WeakOnly;
  EXPECT_NE(params_hash(a), params_hash(b));
}

TEST(ProtocolMode, StringRoundTrip) {
  for (ProtocolMode m : {ProtocolMode::WeakOnly, ProtocolMode::WeakWithStrong}) {
    EXPECT_EQ(protocol_mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(protocol_mode_from_string("strong"), DomainError);
}
