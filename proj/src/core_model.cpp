#include "weakclock/core_model.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <limits>

#include "weakclock/errors.hpp"

namespace weakclock {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kQuarterPi = kPi / 4.0;
// Slack for floating-point round-off in domain comparisons.
constexpr double kDomainSlack = 1e-12;

void check_strength(double g, bool allow_zero) {
  bool ok = std::isfinite(g) && g <= kQuarterPi * (1.0 + kDomainSlack) &&
            (allow_zero ? g >= 0.0 : g > 0.0);
  if (!ok) {
    throw DomainError("measurement strength g=" + std::to_string(g) + " outside " +
                      (allow_zero ? "[0, pi/4]" : "(0, pi/4]"));
  }
}

void check_flip(double p_e, const char* name) {
  if (!(p_e >= 0.0 && p_e <= 0.5)) {
    throw DomainError(std::string(name) + "=" + std::to_string(p_e) + " outside [0, 1/2]");
  }
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

template <typename T>
std::uint64_t fnv1a_value(std::uint64_t h, T value) {
  return fnv1a(h, &value, sizeof(value));
}

}  // namespace

std::string_view to_string(ProtocolMode mode) {
  return mode == ProtocolMode::WeakOnly ? "weak-only" : "weak-with-strong";
}

ProtocolMode protocol_mode_from_string(std::string_view name) {
  if (name == "weak-only" || name == "WeakOnly") return ProtocolMode::WeakOnly;
  if (name == "weak-with-strong" || name == "WeakWithStrong") return ProtocolMode::WeakWithStrong;
  throw DomainError("unknown protocol mode '" + std::string(name) + "'");
}

ProtocolParams ProtocolParams::from_prior(double g, double delta_omega, double T, int N,
                                          ProtocolMode mode, double p_e) {
  if (!(delta_omega > 0.0) || !std::isfinite(delta_omega)) {
    throw DomainError("prior width must be positive and finite");
  }
  ProtocolParams p;
  p.g = g;
  p.delta_omega = delta_omega;
  p.tau = kPi / (2.0 * delta_omega);
  p.T = T;
  p.N = N;
  p.mode = mode;
  p.p_e = p_e;
  p.validate();
  return p;
}

int ProtocolParams::steps() const {
  // The small relative slack absorbs round-off such as 0.3 / 0.1 = 2.9999...
  return static_cast<int>(std::floor(T / tau * (1.0 + 1e-12)));
}

int ProtocolParams::weak_steps() const {
  int m = steps();
  return has_strong() ? m - 1 : m;
}

void ProtocolParams::validate() const {
  check_strength(g, /*allow_zero=*/true);
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive");
  if (!(T >= tau * (1.0 - kDomainSlack)) || !std::isfinite(T)) {
    throw DomainError("T must satisfy T >= tau");
  }
  if (N < 1) throw DomainError("N must be a positive integer");
  check_flip(p_e, "p_e");
  check_flip(p_e_strong, "p_e_strong");
  if (delta_omega < 0.0 || !std::isfinite(delta_omega)) {
    throw DomainError("delta_omega must be non-negative");
  }
  if (delta_omega > 0.0 && delta_omega * tau > kPi / 2.0 * (1.0 + kDomainSlack)) {
    throw DomainError("aliasing: delta_omega * tau = " + std::to_string(delta_omega * tau) +
                      " exceeds pi/2");
  }
  if (steps() < 1) throw DomainError("need at least one measurement step");
}

std::uint64_t params_hash(const ProtocolParams& p) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv1a_value(h, p.g);
  h = fnv1a_value(h, p.tau);
  h = fnv1a_value(h, p.T);
  h = fnv1a_value(h, static_cast<std::int64_t>(p.N));
  h = fnv1a_value(h, p.delta_omega);
  h = fnv1a_value(h, p.p_e);
  h = fnv1a_value(h, p.p_e_strong);
  h = fnv1a_value(h, static_cast<std::int32_t>(p.mode));
  return h;
}

double wrap_angle(double angle) {
  double w = std::remainder(angle, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

KrausPair kraus_pair(double g) {
  check_strength(g, /*allow_zero=*/false);
  const double c = std::cos(g) / std::sqrt(2.0);
  const double s = std::sin(g) / std::sqrt(2.0);
  KrausPair k;
  k.plus << c, s, s, c;
  k.minus << c, -s, -s, c;
  return k;
}

OutcomeProbabilities weak_meas_probabilities(const PlanarState& state, double g, double p_e) {
  check_strength(g, /*allow_zero=*/true);
  check_flip(p_e, "p_e");
  const double signal = (1.0 - 2.0 * p_e) * std::sin(2.0 * g) * state.r * std::cos(state.phi);
  OutcomeProbabilities p;
  p.p0 = 0.5 * (1.0 + signal);
  p.p1 = 0.5 * (1.0 - signal);
  return p;
}

PlanarState planar_state_update(const PlanarState& state, int outcome, double g, double omega,
                                double tau, double p_e) {
  if (outcome != 0 && outcome != 1) throw DomainError("outcome must be 0 or 1");
  check_strength(g, /*allow_zero=*/true);
  check_flip(p_e, "p_e");

  const double sigma = (outcome == 0 ? 1.0 : -1.0) * (1.0 - 2.0 * p_e) * std::sin(2.0 * g);
  const double rx = state.r * std::cos(state.phi);
  const double ry = state.r * std::sin(state.phi);
  const double norm = 1.0 + sigma * rx;
  // Back-action: (r_x, r_y) -> (r_x + sigma, cos(2g) r_y) / (1 + sigma r_x).
  std::complex<double> z((rx + sigma) / norm, std::cos(2.0 * g) * ry / norm);
  z *= std::polar(1.0, -2.0 * omega * tau);

  PlanarState next;
  next.r = std::abs(z);
  next.phi = wrap_angle(std::arg(z));
  return next;
}

double dephasing_rate(double g, double tau) {
  check_strength(g, /*allow_zero=*/false);
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  // Projective limit: the coherence is destroyed in one step.
  if (g >= kQuarterPi * (1.0 - 1e-12)) return std::numeric_limits<double>::infinity();
  // -log1p(cos 2g - 1) keeps precision for small g.
  return -std::log1p(-2.0 * std::sin(g) * std::sin(g)) / (2.0 * tau);
}

double AveragedDynamics::rx(int k) const {
  return std::pow(std::cos(2.0 * g), 0.5 * k) * A * std::cos(alpha * k + phi0);
}

double AveragedDynamics::p0(int k) const {
  return 0.5 * (1.0 + std::sin(2.0 * g) * rx(k));
}

AveragedDynamics averaged_dynamics(double g, double omega, double tau) {
  check_strength(g, /*allow_zero=*/true);
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  const double c2g = std::cos(2.0 * g);
  if (!(c2g > 0.0)) throw DegenerateError("averaged dynamics undefined at g = pi/4");
  const double c = std::cos(2.0 * omega * tau);
  const double s = std::sin(2.0 * omega * tau);
  if (std::abs(s) < 1e-12) {
    throw DegenerateError("sin(2 omega tau) = 0: averaged dynamics amplitude is singular");
  }
  const double cos_alpha = std::cos(g) * std::cos(g) * c / std::sqrt(c2g);
  if (std::abs(cos_alpha) >= 1.0) {
    throw DegenerateError("averaged map has real eigenvalues; no oscillating solution");
  }

  AveragedDynamics d;
  d.g = g;
  d.tau = tau;
  d.alpha = std::acos(cos_alpha);
  d.gamma = g > 0.0 ? dephasing_rate(g, tau) : 0.0;
  // Fix amplitude and phase from r_x(0) = 1 and r_x(tau) = cos(2 omega tau).
  const double a_sin = (std::cos(d.alpha) - c / std::sqrt(c2g)) / std::sin(d.alpha);
  d.A = std::hypot(1.0, a_sin);
  d.phi0 = std::atan2(a_sin, 1.0);
  return d;
}

}  // namespace weakclock
